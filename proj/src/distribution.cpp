#include "lws/distribution.hpp"

#include <cmath>
#include <limits>

#include "lws/errors.hpp"

namespace lws {

namespace {

void check_slot_index(const Assignment& a, std::size_t n_slots) {
  if (a.indices.size() != n_slots) {
    throw DimensionError("assignment has " + std::to_string(a.indices.size()) +
                         " slots, expected " + std::to_string(n_slots));
  }
}

}  // namespace

SlotDistribution::SlotDistribution(std::size_t k) : k_(k) {
  if (k == 0) throw ArgumentError("slot distribution needs at least 1 category");
  mu_.assign(k - 1, 1.0 / static_cast<double>(k));
}

SlotDistribution SlotDistribution::from_mu(std::vector<double> mu) {
  SlotDistribution s;
  s.k_ = mu.size() + 1;
  s.mu_ = std::move(mu);
  return s;
}

SlotDistribution SlotDistribution::from_probs(const std::vector<double>& probs) {
  if (probs.empty()) throw ArgumentError("empty probability vector");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= -1e-12)) {
      throw ArgumentError("negative probability " + std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ArgumentError("probabilities sum to " + std::to_string(sum) +
                        ", expected 1");
  }
  SlotDistribution s;
  s.k_ = probs.size();
  s.mu_.assign(probs.begin(), probs.end() - 1);
  return s;
}

SlotDistribution SlotDistribution::point_mass(std::size_t k,
                                              std::size_t category) {
  if (category >= k) throw ArgumentError("point mass category out of range");
  std::vector<double> probs(k, 0.0);
  probs[category] = 1.0;
  return from_probs(probs);
}

std::vector<double> SlotDistribution::full_probs() const {
  std::vector<double> p(k_);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < k_; ++i) {
    p[i] = mu_[i];
    sum += mu_[i];
  }
  p[k_ - 1] = 1.0 - sum;
  return p;
}

std::size_t SlotDistribution::sample(RandomEngine& rng) const {
  const std::vector<double> p = full_probs();
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

double SlotDistribution::entropy() const {
  double h = 0.0;
  for (double p : full_probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> to_natural(const SlotDistribution& slot) {
  const std::vector<double> p = slot.full_probs();
  const double last = p.back();
  if (!(last > 0.0)) {
    throw ArgumentError("to_natural: last category probability must be positive");
  }
  std::vector<double> alpha(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (!(p[i] > 0.0)) {
      throw ArgumentError("to_natural: zero probability at category " +
                          std::to_string(i));
    }
    alpha[i] = std::log(p[i] / last);
  }
  return alpha;
}

SlotDistribution from_natural(const std::vector<double>& alpha) {
  // mu_i = exp(alpha_i) / (1 + sum_j exp(alpha_j)), stabilised against large
  // alpha by shifting with max(0, alpha).
  double mx = 0.0;
  for (double a : alpha) mx = std::max(mx, a);
  double denom = std::exp(-mx);  // the implicit alpha_K = 0 term
  std::vector<double> e(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    e[i] = std::exp(alpha[i] - mx);
    denom += e[i];
  }
  std::vector<double> mu(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) mu[i] = e[i] / denom;
  return SlotDistribution::from_mu(std::move(mu));
}

double cumulant_gradient_check(const SlotDistribution& slot) {
  const std::vector<double> alpha = to_natural(slot);
  // dA/dalpha_i for A(alpha) = log(1 + sum exp(alpha_j)), recomputed from
  // the natural parameters alone.
  double mx = 0.0;
  for (double a : alpha) mx = std::max(mx, a);
  double denom = std::exp(-mx);
  for (double a : alpha) denom += std::exp(a - mx);
  double worst = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double grad = std::exp(alpha[i] - mx) / denom;
    worst = std::max(worst, std::abs(grad - slot.mu()[i]));
  }
  return worst;
}

JointAssignmentDistribution::JointAssignmentDistribution(
    std::vector<SlotDistribution> slots)
    : slots_(std::move(slots)) {}

JointAssignmentDistribution JointAssignmentDistribution::uniform(
    std::size_t n_slots, std::size_t k) {
  std::vector<SlotDistribution> slots;
  slots.reserve(n_slots);
  for (std::size_t i = 0; i < n_slots; ++i) slots.emplace_back(k);
  return JointAssignmentDistribution(std::move(slots));
}

std::size_t JointAssignmentDistribution::parameter_size() const {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.categories() - 1;
  return n;
}

Assignment JointAssignmentDistribution::sample(RandomEngine& rng) const {
  Assignment a;
  a.indices.reserve(slots_.size());
  for (const auto& s : slots_) {
    a.indices.push_back(static_cast<std::uint32_t>(s.sample(rng)));
  }
  return a;
}

double JointAssignmentDistribution::log_density(const Assignment& a) const {
  check_slot_index(a, slots_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const std::vector<double> p = slots_[i].full_probs();
    if (a.indices[i] >= p.size()) {
      throw ArgumentError("assignment index " + std::to_string(a.indices[i]) +
                          " out of range for slot " + std::to_string(i));
    }
    const double pi = p[a.indices[i]];
    if (pi <= 0.0) return -std::numeric_limits<double>::infinity();
    total += std::log(pi);
  }
  return total;
}

std::vector<double> JointAssignmentDistribution::natural_log_derivative(
    const Assignment& a) const {
  check_slot_index(a, slots_.size());
  std::vector<double> d;
  d.reserve(parameter_size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const SlotDistribution& s = slots_[i];
    if (a.indices[i] >= s.categories()) {
      throw ArgumentError("assignment index " + std::to_string(a.indices[i]) +
                          " out of range for slot " + std::to_string(i));
    }
    for (std::size_t c = 0; c + 1 < s.categories(); ++c) {
      const double t = a.indices[i] == c ? 1.0 : 0.0;
      d.push_back(t - s.mu()[c]);
    }
  }
  return d;
}

Assignment JointAssignmentDistribution::argmax_assignment() const {
  Assignment a;
  a.indices.reserve(slots_.size());
  for (const auto& s : slots_) {
    const std::vector<double> p = s.full_probs();
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    a.indices.push_back(static_cast<std::uint32_t>(best));
  }
  return a;
}

void JointAssignmentDistribution::add_scaled(const std::vector<double>& grad,
                                             double eta) {
  if (grad.size() != parameter_size()) {
    throw DimensionError("gradient length " + std::to_string(grad.size()) +
                         " does not match parameter size " +
                         std::to_string(parameter_size()));
  }
  std::size_t off = 0;
  for (auto& s : slots_) {
    for (double& m : s.mu()) m += eta * grad[off++];
  }
}

void JointAssignmentDistribution::clamp_and_renormalize(double floor) {
  for (std::size_t si = 0; si < slots_.size(); ++si) {
    SlotDistribution& s = slots_[si];
    const double k = static_cast<double>(s.categories());
    if (!(floor >= 0.0) || floor * k >= 1.0) {
      throw ArgumentError("floor " + std::to_string(floor) +
                          " outside [0, 1/K) for slot " + std::to_string(si));
    }
    std::vector<double> p = s.full_probs();
    double sum = 0.0;
    for (double& v : p) {
      if (v < floor) v = floor;
      sum += v;
    }
    for (std::size_t i = 0; i + 1 < p.size(); ++i) s.mu()[i] = p[i] / sum;
  }
}

double JointAssignmentDistribution::entropy() const {
  double h = 0.0;
  for (const auto& s : slots_) h += s.entropy();
  return h;
}

nlohmann::json JointAssignmentDistribution::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : slots_) arr.push_back(s.full_probs());
  return arr;
}

JointAssignmentDistribution JointAssignmentDistribution::from_json(
    const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("distribution json must be an array");
  std::vector<SlotDistribution> slots;
  for (const auto& row : j) {
    if (!row.is_array() || row.empty()) {
      throw FormatError("distribution slot must be a non-empty array");
    }
    // from_probs keeps the first K-1 entries verbatim and recomputes the
    // last, so serialize/parse round trips are value-exact.
    slots.push_back(SlotDistribution::from_probs(row.get<std::vector<double>>()));
  }
  return JointAssignmentDistribution(std::move(slots));
}

}  // namespace lws
