#include "lws/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lws/errors.hpp"

namespace lws {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ArgumentError("item() requires a one-element tensor, got shape " +
                        shape_to_string(shape_));
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

namespace ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + " tensor, got shape " +
                         shape_to_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = pa[i * k + kk];
      const double* pbr = pb + kk * n;
      double* por = po + i * n;
      for (std::size_t j = 0; j < n; ++j) por[j] += av * pbr[j];
    }
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank(x, 4, "conv2d");
  require_rank(kernel, 4, "conv2d");
  require_rank(bias, 1, "conv2d");
  if (kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw DimensionError("conv2d: kernel spatial dims must be 3x3, got " +
                         shape_to_string(kernel.shape()));
  }
  if (kernel.dim(1) != x.dim(1)) {
    throw DimensionError("conv2d: input channels " + std::to_string(x.dim(1)) +
                         " do not match kernel channels " +
                         std::to_string(kernel.dim(1)));
  }
  if (bias.dim(0) != kernel.dim(0)) {
    throw DimensionError("conv2d: bias length " + std::to_string(bias.dim(0)) +
                         " does not match output channels " +
                         std::to_string(kernel.dim(0)));
  }
  const std::size_t bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f = kernel.dim(0);
  Tensor out({bsz, f, h, w});
  const double* px = x.data();
  const double* pk = kernel.data();
  double* po = out.data();
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t of = 0; of < f; ++of) {
      double* pof = po + (b * f + of) * h * w;
      const double bv = bias[of];
      for (std::size_t i = 0; i < h * w; ++i) pof[i] = bv;
      for (std::size_t ic = 0; ic < c; ++ic) {
        const double* pxc = px + (b * c + ic) * h * w;
        const double* pkc = pk + (of * c + ic) * 9;
        for (std::size_t kh = 0; kh < 3; ++kh) {
          for (std::size_t kw = 0; kw < 3; ++kw) {
            const double kv = pkc[kh * 3 + kw];
            // Output rows where input row oh + kh - 1 is in bounds.
            const std::size_t oh_lo = kh == 0 ? 1 : 0;
            const std::size_t oh_hi = kh == 2 ? h - 1 : h;
            const std::size_t ow_lo = kw == 0 ? 1 : 0;
            const std::size_t ow_hi = kw == 2 ? w - 1 : w;
            for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
              // oh + kh >= 1 and ow + kw >= 1 by the bounds above.
              const double* pxr = pxc + (oh + kh - 1) * w;
              double* por = pof + oh * w;
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                por[ow] += kv * pxr[ow + kw - 1];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor maxpool2(const Tensor& x) {
  require_rank(x, 4, "maxpool2");
  const std::size_t bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("maxpool2: spatial dims must be even, got " +
                         shape_to_string(x.shape()));
  }
  Tensor out({bsz, c, h / 2, w / 2});
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t bc = 0; bc < bsz * c; ++bc) {
    const double* pin = px + bc * h * w;
    double* pout = po + bc * (h / 2) * (w / 2);
    for (std::size_t oh = 0; oh < h / 2; ++oh) {
      for (std::size_t ow = 0; ow < w / 2; ++ow) {
        // Strict > keeps the first maximum in row-major window order.
        double best = pin[(2 * oh) * w + 2 * ow];
        const double cands[3] = {pin[(2 * oh) * w + 2 * ow + 1],
                                 pin[(2 * oh + 1) * w + 2 * ow],
                                 pin[(2 * oh + 1) * w + 2 * ow + 1]};
        for (double v : cands)
          if (v > best) best = v;
        pout[oh * (w / 2) + ow] = best;
      }
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add: shape mismatch, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
  require_rank(m, 2, "add_rowwise");
  require_rank(row, 1, "add_rowwise");
  if (m.dim(1) != row.dim(0)) {
    throw DimensionError("add_rowwise: row length " +
                         std::to_string(row.dim(0)) + " does not match " +
                         shape_to_string(m.shape()));
  }
  Tensor out(m.shape());
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = m[i * cols + j] + row[j];
  return out;
}

Tensor scale(const Tensor& x, double c) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = c * x[i];
  return out;
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) +
                         " as " + shape_to_string(new_shape));
  }
  return Tensor(std::move(new_shape), x.vec());
}

Tensor softmax_cross_entropy_mean(const Tensor& logits,
                                  const std::vector<int>& labels) {
  require_rank(logits, 2, "softmax_cross_entropy_mean");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  if (labels.size() != rows) {
    throw DimensionError("softmax_cross_entropy_mean: " +
                         std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= cols) {
      throw ArgumentError("softmax_cross_entropy_mean: label " +
                          std::to_string(y) + " outside [0, " +
                          std::to_string(cols) + ") at row " +
                          std::to_string(i));
    }
    const double* r = logits.data() + i * cols;
    double mx = r[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
    double se = 0.0;
    for (std::size_t j = 0; j < cols; ++j) se += std::exp(r[j] - mx);
    total += std::log(se) - (r[static_cast<std::size_t>(y)] - mx);
  }
  return Tensor::scalar(total / static_cast<double>(rows));
}

}  // namespace ops

}  // namespace lws
