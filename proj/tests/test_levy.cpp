#include <doctest.h>

#include <cmath>
#include <functional>

#include "gfpeel/errors.hpp"
#include "gfpeel/levy.hpp"
#include "gfpeel/levy_json.hpp"
#include "gfpeel/numerics.hpp"

using namespace gfpeel;

TEST_CASE("psi_eval on elementary characteristics") {
  LevyCharacteristics drift;
  drift.b = 1.0;
  CHECK(psi_eval(drift, 2.0) == doctest::Approx(2.0));
  LevyCharacteristics gauss;
  gauss.sigma2 = 2.0;
  gauss.killing = 1.0;
  CHECK(psi_eval(gauss, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("kappa_eval with a single atom") {
  LevyCharacteristics c;
  c.measure = atomic_measure({{-std::log(2.0), 1.0}});
  CHECK(psi_eval(c, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(kappa_eval(c, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  LevyCharacteristics none;
  none.b = 0.3;
  none.sigma2 = 0.5;
  CHECK(kappa_eval(none, 1.7) == doctest::Approx(psi_eval(none, 1.7)));
}

TEST_CASE("kappa_theta closed forms") {
  CHECK(kappa_theta(1.5, 2.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  // 3 sqrt(pi)/4 is the limit at the open end q = 2 theta + 1
  CHECK(kappa_theta(1.5, 4.0 - 1e-9) == doctest::Approx(1.3293403881791370).epsilon(1e-8));
  CHECK_THROWS_AS(kappa_theta(1.5, 4.0), DomainError);
  // removable point q = 2 theta: cos(pi theta) Gamma(theta) / pi (mpmath)
  CHECK(kappa_theta(1.25, 2.5) == doctest::Approx(-0.20401223477456575).epsilon(1e-12));
  CHECK(kappa_theta(0.8, 1.6) == doctest::Approx(-0.29981023245766561).epsilon(1e-12));
  CHECK(kappa_theta_quotient(1.25, 2.5 + 1e-6) == doctest::Approx(kappa_theta(1.25, 2.5)).epsilon(1e-5));
  CHECK_THROWS_AS(kappa_theta(1.25, 1.0), DomainError);
}

TEST_CASE("roots of the stable family") {
  for (auto [theta, wm, wp] : {std::tuple{1.5, 2.0, 3.0}, std::tuple{1.25, 1.75, 2.75}}) {
    const CumulantFunction k = stable_cumulant(theta);
    const RootPair r = find_roots(k, {k.domain.lo + 1e-9, k.domain.hi - 1e-9});
    REQUIRE(r.omega_minus);
    REQUIRE(r.omega_plus);
    CHECK(*r.omega_minus == doctest::Approx(wm).epsilon(1e-12));
    CHECK(*r.omega_plus == doctest::Approx(wp).epsilon(1e-12));
  }
}

TEST_CASE("no roots for an increasing positive cumulant") {
  LevyCharacteristics c;
  c.b = 1.0;
  c.sigma2 = 0.5;
  const CumulantFunction k = make_cumulant(c, {0.0, 10.0});
  const RootPair r = find_roots(k, {0.1, 10.0});
  CHECK_FALSE(r.omega_minus);
  CHECK_FALSE(r.omega_plus);
}

TEST_CASE("kappa_eval of the stable characteristics matches kappa_theta") {
  for (double theta : {0.8, 1.0, 1.25, 1.4}) {
    const LevyCharacteristics c = stable_family_characteristics(theta).chars;
    CHECK(kappa_eval(c, theta + 1.0) == doctest::Approx(kappa_theta(theta, theta + 1.0)).epsilon(1e-6));
  }
  const LevyCharacteristics c = stable_family_characteristics(1.25).chars;
  // Psi_theta(2) = kappa_theta(2) - int (1 - e^y)^2 Lambda(dy)
  const double tail = integrate_measure(
      c.measure, {[](double y) { return std::pow(-std::expm1(y) / y, 2.0); }, 2.0, 0.0, 0.0}, -kInf, 0.0);
  CHECK(psi_eval(c, 2.0) == doctest::Approx(kappa_theta(1.25, 2.0) - tail).epsilon(1e-6));
}

TEST_CASE("support of the stable measure") {
  const LevyMeasure m = stable_theta_measure(1.25);
  CHECK(m.lower == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  const double pos = [] {
    const LevyMeasure m14 = stable_theta_measure(1.49);
    return integrate_measure(m14, {[](double) { return 1.0; }, 0.0, 0.0, 0.0}, 1.0, kInf);
  }();
  const double pos12 = integrate_measure(m, {[](double) { return 1.0; }, 0.0, 0.0, 0.0}, 1.0, kInf);
  CHECK(pos < pos12);
}

TEST_CASE("shifted exponents") {
  const CumulantFunction k = stable_cumulant(1.25);
  const LevyCharacteristics plus = shift_exponent(k, *k.omega_plus);
  const LevyCharacteristics minus = shift_exponent(k, *k.omega_minus);
  CHECK(psi_eval(plus, 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(psi_eval(plus, 0.3) == doctest::Approx(kappa_theta(1.25, 2.75 + 0.3)).epsilon(1e-6));
  const double h = 1e-4;
  CHECK(psi_eval(plus, h) / h > 0.0);
  CHECK(psi_eval(minus, h) / h < 0.0);
}

TEST_CASE("killing identity") {
  CHECK(std::abs(killing_identity(stable_family_characteristics(1.25).chars)) < 1e-6);
  LevyCharacteristics g;
  g.sigma2 = 1.0;
  CHECK(std::abs(killing_identity(g)) < 1e-12);
  LevyCharacteristics atom;
  atom.measure = atomic_measure({{-std::log(2.0), 1.0}});
  atom.killing = 0.3;
  CHECK(killing_identity(atom) == doctest::Approx(0.3).epsilon(1e-10));
}

LevyMeasure density_on_unit(std::function<double(double)> nu) {
  LevyMeasure m;
  m.reduced = [nu](double y) { return nu(std::exp(y)) * std::exp(y); };
  m.upper = 0.0;
  return m;
}

TEST_CASE("symmetry exponent") {
  const std::optional<double> sym = symmetry_exponent(density_on_unit([](double x) { return std::pow(x * (1.0 - x), -2.0); }));
  REQUIRE(sym);
  CHECK(*sym == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  // x^{-w} x^2 is symmetric about 1/2 exactly for w = 2
  const std::optional<double> mono = symmetry_exponent(density_on_unit([](double x) { return x * x; }));
  REQUIRE(mono);
  CHECK(*mono == doctest::Approx(2.0).epsilon(1e-9));
  // the stable measure vanishes below 1/2 after the exponential map
  CHECK_FALSE(symmetry_exponent(stable_theta_measure(1.25)));
}

TEST_CASE("hypergeometric form of the tilted exponent") {
  CHECK(hypergeometric_match(1.25) < 1e-9);
  CHECK(std::abs(kappa_theta(1.5, 3.5) - hypergeometric_phi_plus(1.5, 0.5)) < 1e-9);
  CHECK(std::abs(hypergeometric_phi_plus(1.25, 1e-12)) < 1e-9);
}

TEST_CASE("three-halves identity") {
  for (double q : {2.0, 2.5, 3.2, 4.0}) {
    const IdentitySides s = three_halves_identity(q);
    CHECK(s.lhs == doctest::Approx(s.rhs).epsilon(1e-6));
  }
}

TEST_CASE("characteristics JSON round trip") {
  const LevyCharacteristics c = stable_family_characteristics(1.25).chars;
  const LevyCharacteristics back = characteristics_from_json(characteristics_to_json(c));
  CHECK(kappa_eval(back, 2.0) == doctest::Approx(kappa_eval(c, 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(characteristics_from_json(nlohmann::json{{"sigma2", "x"}}), SchemaError);
}
