#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lws/tensor.hpp"

namespace lws {

// Trunk layer specs. Widths of parametric layers name outputs only; input
// widths are inferred by shape propagation from the example shape.
struct DenseLayer {
  std::size_t out = 0;
  bool shareable = true;
};
struct ConvLayer {
  std::size_t out_channels = 0;
  bool shareable = true;
};
struct ReluLayer {};
struct MaxPool2Layer {};
struct FlattenLayer {};

using LayerSpec =
    std::variant<DenseLayer, ConvLayer, ReluLayer, MaxPool2Layer, FlattenLayer>;

// Shared trunk description. Per-task classifier heads are dense layers from
// the trunk output and are never shared; they are built per task from the
// class counts, not listed here.
struct ArchitectureSpec {
  Shape input_shape;  // per-example shape: {d} or {c, h, w}
  std::vector<LayerSpec> layers;
};

struct ResolvedLayer {
  enum class Kind : std::uint8_t { kDense, kConv, kRelu, kMaxPool2, kFlatten };
  Kind kind = Kind::kDense;
  std::size_t in = 0;   // dense: input width; conv: input channels
  std::size_t out = 0;  // dense: output width; conv: output channels
  bool shareable = false;
  // Index among parametric layers, -1 for relu/pool/flatten.
  int parametric_index = -1;
  // Index among shareable parametric layers, -1 otherwise.
  int shareable_index = -1;
};

struct ResolvedArchitecture {
  ArchitectureSpec spec;
  std::vector<ResolvedLayer> layers;
  std::size_t head_in = 0;  // trunk output width feeding every head
  std::size_t parametric_count = 0;
  std::size_t shareable_count = 0;
};

// Propagates per-example shapes through the chain, assigning parametric and
// shareable indices. Throws SpecError for an unrealisable chain (a conv on
// flat input, odd pooling dims, a trunk that does not end flat, ...).
ResolvedArchitecture resolve(const ArchitectureSpec& spec);

nlohmann::json architecture_to_json(const ArchitectureSpec& spec);
ArchitectureSpec architecture_from_json(const nlohmann::json& j);

}  // namespace lws
