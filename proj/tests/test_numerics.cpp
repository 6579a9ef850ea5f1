#include <doctest.h>

#include <cmath>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"

using namespace gfpeel;

TEST_CASE("log_gamma values and signs") {
  const LogGamma one = log_gamma(1.0);
  CHECK(one.value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(one.sign == 1);
  const LogGamma half = log_gamma(0.5);
  CHECK(half.value == doctest::Approx(0.5723649429247001).epsilon(1e-13));
  CHECK(half.sign == 1);
  // ln|Gamma(1/4)/(-3/4)| from a 30-digit Gamma(1/4)
  const LogGamma neg = log_gamma(-0.75);
  CHECK(neg.value == doctest::Approx(1.5757045971498584).epsilon(1e-12));
  CHECK(neg.sign == -1);
  CHECK_THROWS_AS(log_gamma(0.0), DomainError);
  CHECK_THROWS_AS(log_gamma(-3.0), DomainError);
}

TEST_CASE("gamma_fn matches the recurrence") {
  for (double x : {0.3, 1.7, 4.2, -0.4, -2.6}) CHECK(gamma_fn(x + 1.0) == doctest::Approx(x * gamma_fn(x)).epsilon(1e-12));
  CHECK(gamma_ratio(3.0, -1.0) == 0.0);
}

TEST_CASE("sin_pi and cos_pi are exact at lattice points") {
  CHECK(sin_pi(3.0) == 0.0);
  CHECK(cos_pi(2.5) == 0.0);
  CHECK(cos_pi(1.0) == -1.0);
}

TEST_CASE("incomplete_beta") {
  CHECK(incomplete_beta(-1.5, 0.5, 0.5) == doctest::Approx(-8.0 / 3.0).epsilon(1e-12));
  CHECK(incomplete_beta(1.0, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(incomplete_beta(2.0, 1.0, 0.5) == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("integrate") {
  CHECK(integrate([](double x) { return x; }, 0.0, 1.0).value == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, kInf, {}, Endpoint::regular(), Endpoint::exp_decay(1.0))
            .value == doctest::Approx(1.0).epsilon(1e-10));
  // int_{1/2}^1 x^{-5/2} (1-x)^{-1/2} dx = 8/3 (mpmath oracle)
  const double v = integrate([](double x) { return std::pow(x * (1.0 - x), -2.5) * (1.0 - x) * (1.0 - x); }, 0.5, 1.0,
                             {}, Endpoint::regular(), Endpoint::power(-0.5))
                       .value;
  CHECK(v == doctest::Approx(8.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("integrate reports budget exhaustion") {
  QuadratureSpec spec;
  spec.max_subdivisions = 4;
  spec.abs_tol = 1e-15;
  spec.rel_tol = 1e-15;
  CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, spec), AccuracyError);
}

TEST_CASE("compensated sums") {
  NeumaierSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}
