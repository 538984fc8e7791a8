#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "lws/rng.hpp"

namespace lws {

// One category index per slot, 0-based.
struct Assignment {
  std::vector<std::uint32_t> indices;

  bool operator==(const Assignment& other) const {
    return indices == other.indices;
  }
};

// Categorical distribution over K categories, stored in expectation
// parameters: mu holds the first K-1 probabilities, the last one is
// 1 - sum(mu). In this parameterisation the natural gradient equals the
// plain gradient, so search updates need no Fisher matrix.
class SlotDistribution {
 public:
  // Uniform over k categories.
  explicit SlotDistribution(std::size_t k);

  // mu = first (K-1) probabilities; K = mu.size() + 1.
  static SlotDistribution from_mu(std::vector<double> mu);

  // Full probability vector of length K >= 1.
  static SlotDistribution from_probs(const std::vector<double>& probs);

  static SlotDistribution point_mass(std::size_t k, std::size_t category);

  std::size_t categories() const { return k_; }
  const std::vector<double>& mu() const { return mu_; }
  std::vector<double>& mu() { return mu_; }

  std::vector<double> full_probs() const;
  std::size_t sample(RandomEngine& rng) const;
  double entropy() const;

 private:
  SlotDistribution() = default;
  std::vector<double> mu_;
  std::size_t k_ = 0;
};

// Natural parameters alpha_i = log(mu_i / mu_K); requires all probabilities
// positive.
std::vector<double> to_natural(const SlotDistribution& slot);
SlotDistribution from_natural(const std::vector<double>& alpha);

// Max over i of |dA/dalpha_i - mu_i| at alpha = to_natural(mu), where
// A(alpha) = log(1 + sum exp(alpha_j)). Near zero for a correct pairing of
// the log-normaliser and the expectation parameters.
double cumulant_gradient_check(const SlotDistribution& slot);

// Independent product of per-slot categoricals. Slot category counts may
// differ.
class JointAssignmentDistribution {
 public:
  JointAssignmentDistribution() = default;
  explicit JointAssignmentDistribution(std::vector<SlotDistribution> slots);
  static JointAssignmentDistribution uniform(std::size_t n_slots,
                                             std::size_t k);

  std::size_t slot_count() const { return slots_.size(); }
  const SlotDistribution& slot(std::size_t i) const { return slots_.at(i); }
  SlotDistribution& slot(std::size_t i) { return slots_.at(i); }

  // Total stored parameter count, sum over slots of (K_i - 1).
  std::size_t parameter_size() const;

  Assignment sample(RandomEngine& rng) const;

  // Sum over slots of log p(a_i); -infinity when any slot probability is 0.
  double log_density(const Assignment& a) const;

  // Concatenated per-slot (T(a_i) - mu_i), where T one-hot encodes the first
  // K_i - 1 categories. Equals the natural gradient of log density.
  std::vector<double> natural_log_derivative(const Assignment& a) const;

  // Per-slot argmax over full probabilities; ties resolve to lowest index.
  Assignment argmax_assignment() const;

  // mu += eta * grad over the concatenated parameter vector.
  void add_scaled(const std::vector<double>& grad, double eta);

  // Per slot: rebuild all K probabilities, raise entries below floor to
  // floor, rescale to sum 1, store the first K-1 back. Requires
  // 0 <= floor < 1/K for every slot.
  void clamp_and_renormalize(double floor);

  // Sum of per-slot Shannon entropies, in nats.
  double entropy() const;

  // Array-of-arrays of full per-slot probability vectors; the round trip is
  // value-exact.
  nlohmann::json to_json() const;
  static JointAssignmentDistribution from_json(const nlohmann::json& j);

 private:
  std::vector<SlotDistribution> slots_;
};

}  // namespace lws
