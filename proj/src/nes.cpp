#include "lws/nes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lws/errors.hpp"

namespace lws {

std::vector<std::uint32_t> rank_descending(const std::vector<double>& losses) {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) {
      throw ArgumentError("rank_descending: non-finite loss at position " +
                          std::to_string(i));
    }
  }
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable sort keeps earlier positions first among equal losses.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return losses[a] > losses[b];
  });
  std::vector<std::uint32_t> ranks(losses.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ranks[order[r]] = static_cast<std::uint32_t>(r + 1);
  }
  return ranks;
}

std::vector<double> utilities(const std::vector<double>& losses) {
  if (losses.size() < 2) {
    throw ArgumentError("utilities: need at least 2 losses, got " +
                        std::to_string(losses.size()));
  }
  const std::vector<std::uint32_t> ranks = rank_descending(losses);
  const double denom = static_cast<double>(losses.size() - 1);
  std::vector<double> u(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    u[i] = 2.0 * (static_cast<double>(ranks[i]) - 1.0) / denom - 1.0;
  }
  return u;
}

std::vector<double> estimate_search_gradient(
    const std::vector<ScoredSample>& samples, std::size_t expected_size) {
  if (samples.size() < 2) {
    throw ArgumentError("estimate_search_gradient: need at least 2 samples");
  }
  std::vector<double> losses;
  losses.reserve(samples.size());
  for (const ScoredSample& s : samples) {
    if (s.log_derivative.size() != expected_size) {
      throw DimensionError("log derivative length " +
                           std::to_string(s.log_derivative.size()) +
                           " does not match expected " +
                           std::to_string(expected_size));
    }
    losses.push_back(s.loss);
  }
  const std::vector<double> u = utilities(losses);
  std::vector<double> grad(expected_size, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < expected_size; ++j) {
      grad[j] += u[i] * samples[i].log_derivative[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (double& g : grad) g *= inv;
  return grad;
}

void nes_step(JointAssignmentDistribution& dist,
              const std::vector<double>& gradient, const NesConfig& config) {
  if (gradient.size() != dist.parameter_size()) {
    throw DimensionError("nes_step: gradient length " +
                         std::to_string(gradient.size()) +
                         " does not match distribution parameter size " +
                         std::to_string(dist.parameter_size()));
  }
  dist.add_scaled(gradient, config.eta_pi);
  dist.clamp_and_renormalize(config.floor);
}

}  // namespace lws
