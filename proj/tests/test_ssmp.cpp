#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gfpeel/levy.hpp"
#include "gfpeel/random.hpp"
#include "gfpeel/ssmp.hpp"
#include "gfpeel/statistics.hpp"

using namespace gfpeel;

TEST_CASE("pure drift path") {
  LevyCharacteristics c;
  c.b = 1.0;
  Rng rng = replicate_rng(1, 0);
  const LevyPath p = sample_levy_path(c, 2.0, 1e-2, 0.1, rng);
  REQUIRE(p.grid_times.size() == p.values.size());
  for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(p.values[i] == doctest::Approx(p.grid_times[i]).epsilon(1e-12));
  CHECK(p.end == PathEnd::horizon);
}

TEST_CASE("pure killing at rate ln 2 kills half the paths before time 1") {
  LevyCharacteristics c;
  c.killing = std::log(2.0);
  const long n = 100000;
  std::vector<double> killed(n);
  for (long i = 0; i < n; ++i) {
    Rng rng = replicate_rng(2, static_cast<std::uint64_t>(i));
    killed[i] = sample_levy_path(c, 1.0, 1e-2, 1.0, rng).end == PathEnd::killed ? 1.0 : 0.0;
  }
  const McEstimate e = mean_estimate(killed);
  CHECK(std::abs(e.mean - 0.5) <= 3.0 * e.se);
}

TEST_CASE("exponential martingale with an atom at -ln 2") {
  LevyCharacteristics c;
  c.measure = atomic_measure({{-std::log(2.0), 1.0}});
  c.b = -psi_eval(c, 1.0);  // makes Psi(1) = 0
  CHECK(psi_eval(c, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  const long n = 100000;
  std::vector<double> v(n);
  for (long i = 0; i < n; ++i) {
    Rng rng = replicate_rng(3, static_cast<std::uint64_t>(i));
    v[i] = std::exp(sample_levy_path(c, 1.0, 1e-2, 0.5, rng).values.back());
  }
  const McEstimate e = mean_estimate(v);
  CHECK(std::abs(e.mean - 1.0) <= 3.0 * e.se);
}

TEST_CASE("Lamperti transform") {
  LevyCharacteristics c;
  c.b = 1.0;
  Rng rng = replicate_rng(4, 0);
  const LevyPath p = sample_levy_path(c, 3.0, 1e-2, 1e-2, rng);
  const PssmpPath same = lamperti_transform(p, 1.5, 0.0);
  CHECK(*same.value_at(1.0) == doctest::Approx(1.5 * std::exp(1.0)).epsilon(1e-9));
  // x0 = 2, alpha = -1, xi(t) = t: X(t) = 2 + t
  const PssmpPath y = lamperti_transform(p, 2.0, -1.0);
  for (double t : {0.0, 0.5, 1.0, 3.0}) CHECK(*y.value_at(t) == doctest::Approx(2.0 + t).epsilon(1e-9));
}

TEST_CASE("negative jumps") {
  LevyCharacteristics c;
  c.b = 1.0;
  Rng rng = replicate_rng(5, 0);
  CHECK(negative_jumps(lamperti_transform(sample_levy_path(c, 1.0, 1e-2, 0.1, rng), 1.0, 0.0)).empty());

  const CumulantFunction k = stable_cumulant(1.25);
  const LevySampler sampler(k.chars, 1e-2);
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng r = replicate_rng(6, i);
    PathControl control;
    control.horizon = 2.0;
    control.dt = 1e-2;
    const PssmpPath y = lamperti_transform(sample_levy_path(sampler, control, r), 1.0, 0.0);
    for (std::size_t j = 0; j < y.times.size(); ++j) CHECK(y.values[j] >= 0.5 * y.left_values[j] * (1.0 - 1e-12));
  }
}

TEST_CASE("single atom jump halves the process") {
  LevyCharacteristics c;
  c.measure = atomic_measure({{-std::log(2.0), 1.0}});
  Rng rng = replicate_rng(7, 0);
  const PssmpPath y = lamperti_transform(sample_levy_path(c, 5.0, 1e-2, 0.1, rng), 1.0, 0.0);
  const std::vector<Jump> j = negative_jumps(y);
  REQUIRE(!j.empty());
  for (const Jump& jump : j) {
    const auto it = std::find(y.times.begin(), y.times.end(), jump.time);
    REQUIRE(it != y.times.end());
    const std::size_t idx = static_cast<std::size_t>(it - y.times.begin());
    CHECK(jump.size == doctest::Approx(0.5 * y.left_values[idx]).epsilon(1e-12));
    CHECK(y.values[idx] == doctest::Approx(0.5 * y.left_values[idx]).epsilon(1e-12));
  }
}

TEST_CASE("Mellin check") {
  LevyCharacteristics kill;
  kill.killing = 2.0;
  const McEstimate a = mellin_check(kill, 1.5, 1.0, 20000, 8);
  CHECK(std::abs(a.mean - 0.5) <= 3.0 * a.se + 1e-12);

  LevyCharacteristics c;
  c.b = -1.0;  // Psi(1) = -1
  const McEstimate one = mellin_check(c, 1.0, 1.0, 2000, 9);
  CHECK(std::abs(one.mean - 1.0) <= 3.0 * one.se + 1e-9);
  const McEstimate two = mellin_check(c, 1.0, 2.0, 2000, 9);
  CHECK(std::abs(two.mean - 2.0) <= 3.0 * two.se + 1e-9);
}

TEST_CASE("scaling: start x with clock t x^alpha is x times the unit path") {
  const CumulantFunction k = stable_cumulant(1.25);
  const LevySampler sampler(k.chars, 1e-2);
  const double alpha = -1.25, x = 3.0, t = 0.3;
  const long n = 4000;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    PathControl control;
    control.horizon = 1e3;
    control.dt = 1e-2;
    control.xi_floor = std::log(1e-6);
    Rng r1 = replicate_rng(10, static_cast<std::uint64_t>(i));
    control.clock_x0 = x;
    control.clock_alpha = alpha;
    control.clock_max = t * std::pow(x, alpha);
    const PssmpPath px = lamperti_transform(sample_levy_path(sampler, control, r1), x, alpha);
    a[i] = px.value_at(std::min(control.clock_max, px.end_time())).value_or(0.0) / x;
    Rng r2 = replicate_rng(11, static_cast<std::uint64_t>(i));
    control.clock_x0 = 1.0;
    control.clock_max = t;
    const PssmpPath p1 = lamperti_transform(sample_levy_path(sampler, control, r2), 1.0, alpha);
    b[i] = p1.value_at(std::min(t, p1.end_time())).value_or(0.0);
  }
  CHECK(ks_permutation_test(WeightedSample(a), WeightedSample(b), 200, 12).p_value > 0.001);
}
