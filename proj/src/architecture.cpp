#include "lws/architecture.hpp"

#include <string>

#include "lws/errors.hpp"

namespace lws {

namespace {

[[noreturn]] void chain_error(std::size_t layer, const std::string& what) {
  throw SpecError("architecture layer " + std::to_string(layer) + ": " + what);
}

}  // namespace

ResolvedArchitecture resolve(const ArchitectureSpec& spec) {
  if (spec.input_shape.empty()) {
    throw SpecError("architecture: input shape must not be empty");
  }
  if (shape_numel(spec.input_shape) == 0) {
    throw SpecError("architecture: input shape has a zero dimension");
  }

  ResolvedArchitecture r;
  r.spec = spec;
  Shape cur = spec.input_shape;  // per-example shape

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    ResolvedLayer out;

    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (cur.size() != 1) {
        chain_error(i, "dense layer needs flat input, have shape " +
                           shape_to_string(cur));
      }
      if (d->out == 0) chain_error(i, "dense layer output width must be positive");
      out.kind = ResolvedLayer::Kind::kDense;
      out.in = cur[0];
      out.out = d->out;
      out.shareable = d->shareable;
      cur = {d->out};
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (cur.size() != 3) {
        chain_error(i, "conv layer needs (channels, h, w) input, have shape " +
                           shape_to_string(cur));
      }
      if (c->out_channels == 0) {
        chain_error(i, "conv layer output channels must be positive");
      }
      out.kind = ResolvedLayer::Kind::kConv;
      out.in = cur[0];
      out.out = c->out_channels;
      out.shareable = c->shareable;
      cur = {c->out_channels, cur[1], cur[2]};
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      out.kind = ResolvedLayer::Kind::kRelu;
    } else if (std::holds_alternative<MaxPool2Layer>(layer)) {
      if (cur.size() != 3) {
        chain_error(i, "maxpool2 needs (channels, h, w) input, have shape " +
                           shape_to_string(cur));
      }
      if (cur[1] % 2 != 0 || cur[2] % 2 != 0) {
        chain_error(i, "maxpool2 needs even spatial dims, have shape " +
                           shape_to_string(cur));
      }
      out.kind = ResolvedLayer::Kind::kMaxPool2;
      cur = {cur[0], cur[1] / 2, cur[2] / 2};
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      out.kind = ResolvedLayer::Kind::kFlatten;
      cur = {shape_numel(cur)};
    } else {
      chain_error(i, "unknown layer kind");
    }

    if (out.kind == ResolvedLayer::Kind::kDense ||
        out.kind == ResolvedLayer::Kind::kConv) {
      out.parametric_index = static_cast<int>(r.parametric_count++);
      if (out.shareable) {
        out.shareable_index = static_cast<int>(r.shareable_count++);
      }
    }
    r.layers.push_back(out);
  }

  if (cur.size() != 1) {
    throw SpecError("architecture: trunk must end flat for the heads, ends with " +
                    shape_to_string(cur));
  }
  r.head_in = cur[0];
  return r;
}

nlohmann::json architecture_to_json(const ArchitectureSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& layer : spec.layers) {
    nlohmann::json j;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      j["type"] = "dense";
      j["out"] = d->out;
      j["shareable"] = d->shareable;
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      j["type"] = "conv";
      j["out"] = c->out_channels;
      j["shareable"] = c->shareable;
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      j["type"] = "relu";
    } else if (std::holds_alternative<MaxPool2Layer>(layer)) {
      j["type"] = "maxpool2";
    } else {
      j["type"] = "flatten";
    }
    layers.push_back(std::move(j));
  }
  return nlohmann::json{{"input", spec.input_shape}, {"layers", layers}};
}

ArchitectureSpec architecture_from_json(const nlohmann::json& j) {
  ArchitectureSpec spec;
  if (!j.is_object() || !j.contains("input") || !j.contains("layers")) {
    throw ConfigError("architecture json needs 'input' and 'layers'");
  }
  spec.input_shape = j.at("input").get<Shape>();
  for (const auto& layer : j.at("layers")) {
    const std::string type = layer.at("type").get<std::string>();
    if (type == "dense") {
      DenseLayer d;
      d.out = layer.at("out").get<std::size_t>();
      d.shareable = layer.value("shareable", true);
      spec.layers.emplace_back(d);
    } else if (type == "conv") {
      ConvLayer c;
      c.out_channels = layer.at("out").get<std::size_t>();
      c.shareable = layer.value("shareable", true);
      spec.layers.emplace_back(c);
    } else if (type == "relu") {
      spec.layers.emplace_back(ReluLayer{});
    } else if (type == "maxpool2") {
      spec.layers.emplace_back(MaxPool2Layer{});
    } else if (type == "flatten") {
      spec.layers.emplace_back(FlattenLayer{});
    } else {
      throw ConfigError("architecture json: unknown layer type '" + type + "'");
    }
  }
  return spec;
}

}  // namespace lws
