#include <doctest.h>

#include <cmath>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"
#include "gfpeel/random.hpp"
#include "gfpeel/stable.hpp"
#include "gfpeel/statistics.hpp"

using namespace gfpeel;

TEST_CASE("positive stable moments") {
  const double beta = 0.8;
  Rng rng = replicate_rng(41, 0);
  const std::size_t n = 100000;
  std::vector<double> inv(n), lap(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sample_positive_stable(beta, rng);
    inv[i] = 1.0 / s;
    lap[i] = std::exp(-s);
  }
  const McEstimate a = mean_estimate(inv);
  CHECK(std::abs(a.mean - 1.0) <= 3.0 * a.se);
  // exp(-Gamma(1 + 1/beta)^beta) (mpmath)
  const McEstimate b = mean_estimate(lap);
  CHECK(std::abs(b.mean - 0.33119183739559109) <= 3.0 * b.se);
  CHECK_THROWS_AS(sample_positive_stable(1.0, rng), DomainError);
}

TEST_CASE("positive stable degenerates at beta = 1") {
  auto variance = [](double beta) {
    Rng rng = replicate_rng(42, 0);
    std::vector<double> v(20000);
    for (double& x : v) x = sample_positive_stable(beta, rng);
    const McEstimate e = mean_estimate(v);
    return e.se * e.se * static_cast<double>(v.size());
  };
  CHECK(variance(0.99) < variance(0.95));
}

TEST_CASE("inverse-size-biased law") {
  Rng rng = replicate_rng(43, 0);
  const WeightedSample s = inverse_size_biased_law(0.8, 100000, rng);
  double total = 0.0;
  for (double w : s.weights()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.mean() - 1.0) <= 3.0 * s.mean_se());
  const double med = s.quantile(0.5);
  CHECK(std::abs(s.cdf(med) - 0.5) < 0.01);
}

TEST_CASE("weighted KS") {
  const WeightedSample a(std::vector<double>{0.1, 0.5, 0.9, 1.3});
  CHECK(weighted_ks(a, a) == 0.0);
  Rng rng = replicate_rng(44, 0);
  std::vector<double> u(20000), v(20000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = uniform_open(rng);
    v[i] = uniform_open(rng) + 0.2;
  }
  CHECK(weighted_ks(WeightedSample(u), WeightedSample(v)) == doctest::Approx(0.2).epsilon(0.05));
  CHECK_THROWS_AS(weighted_ks(WeightedSample(), a), DomainError);
  CHECK_THROWS_AS(WeightedSample({1.0, 2.0}, {1.0, -1.0}), DomainError);
}

TEST_CASE("permutation KS is calibrated under the null") {
  int accepted = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng = replicate_rng(45, static_cast<std::uint64_t>(rep));
    std::vector<double> a(10000), b(10000);
    for (double& x : a) x = -std::log(uniform_open(rng));
    for (double& x : b) x = -std::log(uniform_open(rng));
    if (ks_permutation_test(WeightedSample(a), WeightedSample(b), 100, 1000 + rep).p_value > 0.01) ++accepted;
  }
  CHECK(accepted >= 95);
}

TEST_CASE("tail estimators on a Pareto law") {
  Rng rng = replicate_rng(46, 0);
  std::vector<double> x(100000);
  for (double& v : x) v = std::pow(uniform_open(rng), -1.0 / 1.5);
  CHECK(hill_estimator(x, 10000) == doctest::Approx(1.5).epsilon(0.05));
  CHECK(survival_tail_slope(x) == doctest::Approx(-1.5).epsilon(0.05));
}
