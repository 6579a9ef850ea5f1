#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gfpeel/ssmp.hpp"

namespace gfpeel {

// Empirical law with nonnegative weights normalized to sum 1.
class WeightedSample {
 public:
  WeightedSample() = default;
  // Equal weights.
  explicit WeightedSample(std::vector<double> values);
  // Weights are normalized here; throws DomainError if any weight is negative
  // or all vanish, or if a value is not finite.
  WeightedSample(std::vector<double> values, std::vector<double> weights);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool uniform() const { return uniform_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }

  double mean() const;
  // Standard error of the (self-normalized) weighted mean.
  double mean_se() const;
  // Kish effective sample size.
  double effective_size() const;
  // Weighted ECDF, P(X <= x).
  double cdf(double x) const;
  // Smallest value v with cdf(v) >= p.
  double quantile(double p) const;

 private:
  std::vector<double> values_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

// sup_x |F_a(x) - F_b(x)| of the two weighted ECDFs. Throws DomainError on an empty sample.
double weighted_ks(const WeightedSample& a, const WeightedSample& b);

struct KsTest {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

// Permutation test: the pooled observations keep their importance weights
// (scaled to mean 1 within their own sample) and the sample labels are
// reshuffled `permutations` times; p = (1 + #{D* >= D}) / (1 + permutations).
KsTest ks_permutation_test(const WeightedSample& a, const WeightedSample& b, int permutations,
                           std::uint64_t seed);

// Hill estimate of the tail index from the k largest observations (k >= 2).
double hill_estimator(std::span<const double> xs, std::size_t k);

// Least-squares slope of log P(X > x) against log x over the order statistics
// whose empirical survival lies in [lo, hi] (default: the top decade).
double survival_tail_slope(std::span<const double> xs, double lo = 0.01, double hi = 0.1);

McEstimate mean_estimate(std::span<const double> xs);

}  // namespace gfpeel
