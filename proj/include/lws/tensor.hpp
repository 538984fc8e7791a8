#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lws {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor of 64-bit reals. Rank 0 with one element is a scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  // The single element of a one-element tensor.
  double item() const;
  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> data_;
};

namespace ops {

// Pure forward primitives. Every function returns a fresh tensor and leaves
// its inputs untouched; repeated calls on equal inputs are bitwise identical.

// (m x k) times (k x n) -> (m x n).
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise max(x, 0).
Tensor relu(const Tensor& x);

// 3x3 cross-correlation, stride 1, zero padding 1, plus per-channel bias.
// x: (batch, in_ch, h, w), kernel: (out_ch, in_ch, 3, 3), bias: (out_ch).
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

// 2x2 non-overlapping max pooling; h and w must be even.
Tensor maxpool2(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);

// (m x n) plus a length-n row vector broadcast over rows.
Tensor add_rowwise(const Tensor& m, const Tensor& row);

Tensor scale(const Tensor& x, double c);

Tensor reshape(const Tensor& x, Shape new_shape);

// Mean over rows of the softmax cross-entropy against integer labels,
// stabilised by row-max subtraction. Returns a scalar tensor.
Tensor softmax_cross_entropy_mean(const Tensor& logits,
                                  const std::vector<int>& labels);

}  // namespace ops

}  // namespace lws
