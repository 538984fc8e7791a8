#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lws/tensor.hpp"

namespace lws {

// Trainable tensor with a persistent gradient accumulator. Gradients are
// never overwritten by backward passes, only added to; call zero_grad to
// reset between optimizer steps.
struct Parameter {
  Tensor value;
  Tensor grad;
  std::uint64_t id = 0;

  Parameter() = default;
  Parameter(Tensor v, std::uint64_t id_)
      : value(std::move(v)), grad(value.shape()), id(id_) {}

  void zero_grad() { grad.fill(0.0); }
};

void zero_gradients(const std::vector<Parameter*>& params);

// Ordered record of primitive operations from one forward pass. backward()
// replays adjoints in reverse order and accumulates into the grad of every
// parameter the pass touched. A parameter referenced through several
// tape nodes (shared weights) receives the sum of all contributions.
class Tape {
 public:
  using NodeId = std::uint32_t;

  NodeId parameter(Parameter& p);
  NodeId constant(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId relu(NodeId x);
  NodeId conv2d(NodeId x, NodeId kernel, NodeId bias);
  NodeId maxpool2(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId add_rowwise(NodeId m, NodeId row);
  NodeId scale(NodeId x, double c);
  NodeId reshape(NodeId x, Shape new_shape);
  NodeId softmax_cross_entropy_mean(NodeId logits, std::vector<int> labels);

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // loss must hold exactly one element. Accumulates d(loss)/d(p) into the
  // grad of every parameter recorded on this tape.
  void backward(NodeId loss);

 private:
  enum class Op : std::uint8_t {
    kParameter,
    kConstant,
    kMatmul,
    kRelu,
    kConv2d,
    kMaxPool2,
    kAdd,
    kAddRowwise,
    kScale,
    kReshape,
    kSoftmaxXentMean,
  };

  struct Node {
    Op op;
    std::uint8_t n_in = 0;
    std::array<NodeId, 3> in{};
    Tensor value;
    double c = 0.0;
    std::vector<int> labels;
    Parameter* param = nullptr;
  };

  NodeId push(Node node);
  const Tensor& input_value(const Node& node, std::size_t i) const;

  std::vector<Node> nodes_;
};

}  // namespace lws
