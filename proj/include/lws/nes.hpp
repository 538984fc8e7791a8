#pragma once

#include <cstdint>
#include <vector>

#include "lws/distribution.hpp"

namespace lws {

struct NesConfig {
  std::size_t lambda_pi = 8;  // population size, >= 2
  double eta_pi = 1e-2;
  double floor = 1e-3;
};

// One evaluated population member.
struct ScoredSample {
  Assignment assignment;
  double loss = 0.0;
  std::vector<double> log_derivative;
};

// Descending ranks, 1-based: the largest loss gets rank 1, the smallest gets
// rank lambda. Equal losses are ordered by position. Rejects non-finite
// losses.
std::vector<std::uint32_t> rank_descending(const std::vector<double>& losses);

// Rank-based fitness shaping: u_i = 2 * (rank(l_i) - 1) / (lambda - 1) - 1.
// The lowest loss maps to +1, the highest to -1; values depend on ranks only.
// Requires at least 2 losses.
std::vector<double> utilities(const std::vector<double>& losses);

// Monte Carlo search gradient (1/lambda) * sum_i u_i * log_derivative_i.
// Every log derivative must have length expected_size.
std::vector<double> estimate_search_gradient(
    const std::vector<ScoredSample>& samples, std::size_t expected_size);

// dist += eta_pi * gradient, then clamp_and_renormalize(floor). The gradient
// is already natural because the distribution stores expectation parameters.
void nes_step(JointAssignmentDistribution& dist,
              const std::vector<double>& gradient, const NesConfig& config);

}  // namespace lws
