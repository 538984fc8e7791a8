#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lws/autodiff.hpp"

namespace lws {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are keyed by parameter id; the step
// counter is shared and advances exactly once per step() call.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const std::vector<Parameter*>& params, AdamConfig cfg = {});

  // Applies one update from each parameter's current grad. Throws StateError
  // for a parameter id with no registered moments.
  void step(const std::vector<Parameter*>& params, double learning_rate);

  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  bool has(std::uint64_t id) const { return m_.count(id) != 0; }
  const Tensor& first_moment(std::uint64_t id) const;
  const Tensor& second_moment(std::uint64_t id) const;

  // Checkpoint restore: overwrite the full state.
  void restore(std::uint64_t t, AdamConfig cfg,
               std::unordered_map<std::uint64_t, Tensor> m,
               std::unordered_map<std::uint64_t, Tensor> v);
  const std::unordered_map<std::uint64_t, Tensor>& first_moments() const {
    return m_;
  }
  const std::unordered_map<std::uint64_t, Tensor>& second_moments() const {
    return v_;
  }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::unordered_map<std::uint64_t, Tensor> m_;
  std::unordered_map<std::uint64_t, Tensor> v_;
};

}  // namespace lws
