#pragma once

#include <map>
#include <memory>
#include <vector>

#include "lws/architecture.hpp"
#include "lws/autodiff.hpp"
#include "lws/distribution.hpp"
#include "lws/rng.hpp"

namespace lws {

// Weight and bias of one candidate (or one head).
struct ParamGroup {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  std::size_t size() const { return weight->value.numel() + bias->value.numel(); }
};

enum class FixedMode { kFullSharing, kNoSharing };

// Candidate weights for every parametric trunk layer plus per-task heads.
// Shareable layers hold K candidates each; non-shareable layers hold a
// single copy used by every task. Slots are the (task, shareable layer)
// cells, laid out task-major.
class WeightBank {
 public:
  WeightBank(const ResolvedArchitecture& arch, std::size_t k,
             const std::vector<std::size_t>& task_classes, RandomEngine& rng);

  const ResolvedArchitecture& architecture() const { return arch_; }
  std::size_t candidates() const { return k_; }
  std::size_t tasks() const { return heads_.size(); }
  std::size_t shareable_layers() const { return arch_.shareable_count; }
  std::size_t slots() const { return tasks() * shareable_layers(); }

  std::size_t slot_index(std::size_t task, std::size_t shareable_layer) const;

  // Candidate group for parametric layer p (0 <= p < parametric_count).
  // Non-shareable layers only have candidate 0.
  const ParamGroup& candidate(std::size_t parametric_layer,
                              std::size_t candidate_index) const;
  ParamGroup& candidate(std::size_t parametric_layer, std::size_t candidate_index);
  std::size_t layer_candidates(std::size_t parametric_layer) const;

  const ParamGroup& head(std::size_t task) const;
  ParamGroup& head(std::size_t task);

  // All parameters in creation order; ids are dense from 0.
  std::vector<Parameter*> all_parameters() const;
  Parameter* parameter_by_id(std::uint64_t id) const;

  // Uniform search distribution with one slot per (task, shareable layer).
  JointAssignmentDistribution uniform_distribution() const;

  // Records the task network under the given assignment on the tape and
  // returns the logits node. x: (batch, example dims...).
  Tape::NodeId forward_task(Tape& tape, std::size_t task, const Assignment& a,
                            const Tensor& x) const;

 private:
  ResolvedArchitecture arch_;
  std::size_t k_ = 0;
  std::vector<std::unique_ptr<Parameter>> storage_;
  // candidates_[parametric_layer][candidate]
  std::vector<std::vector<ParamGroup>> candidates_;
  std::vector<ParamGroup> heads_;
};

// full_sharing: every slot picks candidate 0. no_sharing: task t picks
// candidate t on every layer, which needs k >= tasks.
Assignment fixed_assignment(FixedMode mode, std::size_t tasks,
                            std::size_t shareable_layers, std::size_t k);

// Total parameters actually referenced under the assignment: every distinct
// (layer, candidate) pair once, plus all heads, plus non-shareable layers.
std::size_t count_effective_parameters(const WeightBank& bank,
                                       const Assignment& a);

// Per shareable layer, a histogram mapping sharing-group size to the number
// of groups of that size. Group = set of tasks picking the same candidate.
struct SharingSummary {
  std::vector<std::map<std::size_t, std::size_t>> layer_histograms;
};

SharingSummary sharing_summary(const Assignment& a, std::size_t tasks,
                               std::size_t shareable_layers);

}  // namespace lws
