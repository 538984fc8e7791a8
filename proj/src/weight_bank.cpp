#include "lws/weight_bank.hpp"

#include <set>
#include <string>

#include "lws/errors.hpp"

namespace lws {

WeightBank::WeightBank(const ResolvedArchitecture& arch, std::size_t k,
                       const std::vector<std::size_t>& task_classes,
                       RandomEngine& rng)
    : arch_(arch), k_(k) {
  if (k == 0) throw ConfigError("weight bank needs at least 1 candidate");
  if (task_classes.empty()) throw ConfigError("weight bank needs at least 1 task");

  std::uint64_t next_id = 0;
  auto fresh = [&](Shape shape, std::size_t fan_in) {
    storage_.push_back(std::make_unique<Parameter>(
        he_uniform_init(std::move(shape), fan_in, rng), next_id++));
    return storage_.back().get();
  };

  // Draw order is fixed: trunk layers in network order, candidates in index
  // order, weight before bias, then heads in task order. Changing it would
  // silently reshuffle every seeded experiment.
  candidates_.resize(arch_.parametric_count);
  for (const ResolvedLayer& layer : arch_.layers) {
    if (layer.parametric_index < 0) continue;
    const std::size_t copies = layer.shareable ? k_ : 1;
    auto& cands = candidates_[static_cast<std::size_t>(layer.parametric_index)];
    for (std::size_t c = 0; c < copies; ++c) {
      ParamGroup g;
      if (layer.kind == ResolvedLayer::Kind::kDense) {
        g.weight = fresh({layer.in, layer.out}, layer.in);
        g.bias = fresh({layer.out}, layer.in);
      } else {
        g.weight = fresh({layer.out, layer.in, 3, 3}, layer.in * 9);
        g.bias = fresh({layer.out}, layer.in * 9);
      }
      cands.push_back(g);
    }
  }
  for (std::size_t t = 0; t < task_classes.size(); ++t) {
    if (task_classes[t] < 2) {
      throw ConfigError("task " + std::to_string(t) +
                        " needs at least 2 classes");
    }
    ParamGroup g;
    g.weight = fresh({arch_.head_in, task_classes[t]}, arch_.head_in);
    g.bias = fresh({task_classes[t]}, arch_.head_in);
    heads_.push_back(g);
  }
}

std::size_t WeightBank::slot_index(std::size_t task,
                                   std::size_t shareable_layer) const {
  if (task >= tasks() || shareable_layer >= shareable_layers()) {
    throw ArgumentError("slot (" + std::to_string(task) + ", " +
                        std::to_string(shareable_layer) + ") out of range");
  }
  return task * shareable_layers() + shareable_layer;
}

const ParamGroup& WeightBank::candidate(std::size_t parametric_layer,
                                        std::size_t candidate_index) const {
  return candidates_.at(parametric_layer).at(candidate_index);
}

ParamGroup& WeightBank::candidate(std::size_t parametric_layer,
                                  std::size_t candidate_index) {
  return candidates_.at(parametric_layer).at(candidate_index);
}

std::size_t WeightBank::layer_candidates(std::size_t parametric_layer) const {
  return candidates_.at(parametric_layer).size();
}

const ParamGroup& WeightBank::head(std::size_t task) const {
  return heads_.at(task);
}

ParamGroup& WeightBank::head(std::size_t task) { return heads_.at(task); }

std::vector<Parameter*> WeightBank::all_parameters() const {
  std::vector<Parameter*> out;
  out.reserve(storage_.size());
  for (const auto& p : storage_) out.push_back(p.get());
  return out;
}

Parameter* WeightBank::parameter_by_id(std::uint64_t id) const {
  if (id >= storage_.size()) {
    throw ArgumentError("unknown parameter id " + std::to_string(id));
  }
  return storage_[static_cast<std::size_t>(id)].get();
}

JointAssignmentDistribution WeightBank::uniform_distribution() const {
  return JointAssignmentDistribution::uniform(slots(), k_);
}

Tape::NodeId WeightBank::forward_task(Tape& tape, std::size_t task,
                                      const Assignment& a,
                                      const Tensor& x) const {
  if (task >= tasks()) {
    throw ArgumentError("task " + std::to_string(task) + " out of range");
  }
  if (a.indices.size() != slots()) {
    throw DimensionError("assignment covers " +
                         std::to_string(a.indices.size()) + " slots, bank has " +
                         std::to_string(slots()));
  }
  if (x.rank() != arch_.spec.input_shape.size() + 1) {
    throw DimensionError("forward_task: input shape " +
                         shape_to_string(x.shape()) +
                         " does not extend example shape " +
                         shape_to_string(arch_.spec.input_shape));
  }
  for (std::size_t d = 0; d < arch_.spec.input_shape.size(); ++d) {
    if (x.dim(d + 1) != arch_.spec.input_shape[d]) {
      throw DimensionError("forward_task: input shape " +
                           shape_to_string(x.shape()) +
                           " does not extend example shape " +
                           shape_to_string(arch_.spec.input_shape));
    }
  }

  const std::size_t batch = x.dim(0);
  Tape::NodeId cur = tape.constant(x);
  for (const ResolvedLayer& layer : arch_.layers) {
    switch (layer.kind) {
      case ResolvedLayer::Kind::kDense:
      case ResolvedLayer::Kind::kConv: {
        std::size_t pick = 0;
        if (layer.shareable) {
          const std::size_t slot = slot_index(
              task, static_cast<std::size_t>(layer.shareable_index));
          pick = a.indices[slot];
          if (pick >= k_) {
            throw ArgumentError("assignment index " + std::to_string(pick) +
                                " out of range for " + std::to_string(k_) +
                                " candidates");
          }
        }
        const ParamGroup& g =
            candidate(static_cast<std::size_t>(layer.parametric_index), pick);
        const Tape::NodeId w = tape.parameter(*g.weight);
        const Tape::NodeId b = tape.parameter(*g.bias);
        if (layer.kind == ResolvedLayer::Kind::kDense) {
          cur = tape.add_rowwise(tape.matmul(cur, w), b);
        } else {
          cur = tape.conv2d(cur, w, b);
        }
        break;
      }
      case ResolvedLayer::Kind::kRelu:
        cur = tape.relu(cur);
        break;
      case ResolvedLayer::Kind::kMaxPool2:
        cur = tape.maxpool2(cur);
        break;
      case ResolvedLayer::Kind::kFlatten:
        cur = tape.reshape(cur, {batch, tape.value(cur).numel() / batch});
        break;
    }
  }

  const ParamGroup& h = heads_.at(task);
  const Tape::NodeId w = tape.parameter(*h.weight);
  const Tape::NodeId b = tape.parameter(*h.bias);
  return tape.add_rowwise(tape.matmul(cur, w), b);
}

Assignment fixed_assignment(FixedMode mode, std::size_t tasks,
                            std::size_t shareable_layers, std::size_t k) {
  if (mode == FixedMode::kNoSharing && k < tasks) {
    throw ConfigError("no_sharing needs K >= tasks, have K=" +
                      std::to_string(k) + " for " + std::to_string(tasks) +
                      " tasks");
  }
  Assignment a;
  a.indices.resize(tasks * shareable_layers);
  for (std::size_t t = 0; t < tasks; ++t) {
    for (std::size_t l = 0; l < shareable_layers; ++l) {
      a.indices[t * shareable_layers + l] =
          mode == FixedMode::kFullSharing ? 0u : static_cast<std::uint32_t>(t);
    }
  }
  return a;
}

std::size_t count_effective_parameters(const WeightBank& bank,
                                       const Assignment& a) {
  if (a.indices.size() != bank.slots()) {
    throw DimensionError("assignment covers " +
                         std::to_string(a.indices.size()) + " slots, bank has " +
                         std::to_string(bank.slots()));
  }
  std::size_t total = 0;
  std::size_t shareable_seen = 0;
  const auto& arch = bank.architecture();
  for (const ResolvedLayer& layer : arch.layers) {
    if (layer.parametric_index < 0) continue;
    const auto p = static_cast<std::size_t>(layer.parametric_index);
    if (!layer.shareable) {
      total += bank.candidate(p, 0).size();
      continue;
    }
    std::set<std::uint32_t> used;
    for (std::size_t t = 0; t < bank.tasks(); ++t) {
      used.insert(a.indices[t * bank.shareable_layers() + shareable_seen]);
    }
    for (std::uint32_t c : used) total += bank.candidate(p, c).size();
    ++shareable_seen;
  }
  for (std::size_t t = 0; t < bank.tasks(); ++t) total += bank.head(t).size();
  return total;
}

SharingSummary sharing_summary(const Assignment& a, std::size_t tasks,
                               std::size_t shareable_layers) {
  if (a.indices.size() != tasks * shareable_layers) {
    throw DimensionError("assignment covers " +
                         std::to_string(a.indices.size()) +
                         " slots, expected " +
                         std::to_string(tasks * shareable_layers));
  }
  SharingSummary s;
  s.layer_histograms.resize(shareable_layers);
  for (std::size_t l = 0; l < shareable_layers; ++l) {
    std::map<std::uint32_t, std::size_t> group_sizes;
    for (std::size_t t = 0; t < tasks; ++t) {
      ++group_sizes[a.indices[t * shareable_layers + l]];
    }
    for (const auto& [cand, size] : group_sizes) {
      ++s.layer_histograms[l][size];
    }
  }
  return s;
}

}  // namespace lws
