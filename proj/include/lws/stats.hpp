#pragma once

#include <vector>

namespace lws {

struct MannWhitneyResult {
  double u = 0.0;          // U statistic of sample_a (midranks for ties)
  double p_one_sided = 0.0;  // alternative: sample_a stochastically smaller
};

// Rank-sum Mann-Whitney U. Small combined samples (n <= 20, which covers
// ten-vs-ten comparisons) get an exact permutation p-value; larger ones use
// the normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_u(const std::vector<double>& sample_a,
                                 const std::vector<double>& sample_b);

// Both routes exposed for cross-checking on ranges where they overlap.
double mann_whitney_exact_p(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b);
double mann_whitney_normal_p(const std::vector<double>& sample_a,
                             const std::vector<double>& sample_b);

}  // namespace lws
