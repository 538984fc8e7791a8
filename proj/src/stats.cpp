#include "lws/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "lws/errors.hpp"

namespace lws {

namespace {

constexpr std::size_t kExactLimit = 20;  // max combined size for the exact path

void validate(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw ArgumentError("mann_whitney_u: both samples must be non-empty");
  }
  for (double v : a) {
    if (!std::isfinite(v)) throw ArgumentError("mann_whitney_u: non-finite value");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw ArgumentError("mann_whitney_u: non-finite value");
  }
}

// Midranks of the combined sample, doubled so ties stay integral.
// Also reports sum_(t^3 - t) over tie groups for the variance correction.
struct RankedData {
  std::vector<std::int64_t> doubled_ranks;  // combined order: a then b
  double tie_term = 0.0;
};

RankedData doubled_midranks(const std::vector<double>& a,
                            const std::vector<double>& b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> all;
  all.reserve(n);
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return all[x] < all[y]; });

  RankedData rd;
  rd.doubled_ranks.assign(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && all[order[j]] == all[order[i]]) ++j;
    // Positions i+1 .. j hold equal values; midrank = (i+1 + j) / 2.
    const std::int64_t doubled = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rd.doubled_ranks[order[k]] = doubled;
    const double t = static_cast<double>(j - i);
    rd.tie_term += t * t * t - t;
    i = j;
  }
  return rd;
}

double u_statistic(const std::vector<double>& a, const std::vector<double>& b,
                   const RankedData& rd) {
  std::int64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) doubled_rank_sum += rd.doubled_ranks[i];
  const double r1 = static_cast<double>(doubled_rank_sum) / 2.0;
  const double n1 = static_cast<double>(a.size());
  return r1 - n1 * (n1 + 1.0) / 2.0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double mann_whitney_exact_p(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b) {
  validate(sample_a, sample_b);
  const RankedData rd = doubled_midranks(sample_a, sample_b);
  const std::size_t n = rd.doubled_ranks.size();
  const std::size_t n1 = sample_a.size();

  // Doubled U of sample_a; integral because doubled midranks are integral.
  std::int64_t doubled_r1 = 0;
  for (std::size_t i = 0; i < n1; ++i) doubled_r1 += rd.doubled_ranks[i];
  const std::int64_t doubled_u_obs =
      doubled_r1 - static_cast<std::int64_t>(n1 * (n1 + 1));

  // Distribution of the doubled rank sum over all C(n, n1) subsets of the
  // observed (tied) ranks, by dynamic programming over items.
  std::int64_t max_sum = 0;
  for (std::int64_t r : rd.doubled_ranks) max_sum += r;
  std::vector<std::vector<double>> ways(
      n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t item = 0; item < n; ++item) {
    const std::int64_t r = rd.doubled_ranks[item];
    const std::size_t top = std::min(n1, item + 1);
    for (std::size_t c = top; c >= 1; --c) {
      std::vector<double>& dst = ways[c];
      const std::vector<double>& src = ways[c - 1];
      for (std::int64_t s = max_sum - r; s >= 0; --s) {
        const double w = src[static_cast<std::size_t>(s)];
        if (w != 0.0) dst[static_cast<std::size_t>(s + r)] += w;
      }
    }
  }

  double favourable = 0.0;
  double total = 0.0;
  const std::int64_t offset = static_cast<std::int64_t>(n1 * (n1 + 1));
  for (std::int64_t s = 0; s <= max_sum; ++s) {
    const double w = ways[n1][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    total += w;
    if (s - offset <= doubled_u_obs) favourable += w;
  }
  return favourable / total;
}

double mann_whitney_normal_p(const std::vector<double>& sample_a,
                             const std::vector<double>& sample_b) {
  validate(sample_a, sample_b);
  const RankedData rd = doubled_midranks(sample_a, sample_b);
  const double n1 = static_cast<double>(sample_a.size());
  const double n2 = static_cast<double>(sample_b.size());
  const double n = n1 + n2;
  const double u = u_statistic(sample_a, sample_b, rd);
  const double mean = n1 * n2 / 2.0;
  const double variance =
      n1 * n2 / 12.0 * ((n + 1.0) - rd.tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) return 0.5;  // all values tied: no evidence either way
  // Continuity correction toward the mean for the left-tail alternative.
  return normal_cdf((u + 0.5 - mean) / std::sqrt(variance));
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& sample_a,
                                 const std::vector<double>& sample_b) {
  validate(sample_a, sample_b);
  const RankedData rd = doubled_midranks(sample_a, sample_b);
  MannWhitneyResult result;
  result.u = u_statistic(sample_a, sample_b, rd);
  result.p_one_sided = sample_a.size() + sample_b.size() <= kExactLimit
                           ? mann_whitney_exact_p(sample_a, sample_b)
                           : mann_whitney_normal_p(sample_a, sample_b);
  return result;
}

}  // namespace lws
