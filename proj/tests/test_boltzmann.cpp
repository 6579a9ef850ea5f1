#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gfpeel/errors.hpp"
#include "gfpeel/nu_table.hpp"
#include "gfpeel/peeling.hpp"

using namespace gfpeel;

namespace {

const NuTable& table() {
  static const NuTable nu = build_nu(WeightSequence::explicit_family(1.25), 100000, NuMethod::closed_form);
  return nu;
}

const PeelKernel& kernel() {
  static const PeelKernel k(table());
  return k;
}

}  // namespace

TEST_CASE("harmonic functions are exact rationals") {
  CHECK(h_down_exact(0) == BigRational(1));
  CHECK(h_down_exact(1) == BigRational(1, 2));
  CHECK(h_down_exact(2) == BigRational(3, 8));
  CHECK(h_up_exact(1) == BigRational(1));
  CHECK(h_up_exact(2) == BigRational(3, 2));
  CHECK(h_up_exact(3) == BigRational(15, 8));
  CHECK(h_up(3.0) == doctest::Approx(1.875));
}

TEST_CASE("step law at small arguments") {
  const NuTable& nu = table();
  const WeightSequence& ws = nu.weights();
  CHECK(nu(0) == 0.0);
  CHECK(nu(1) == doctest::Approx(ws.q(2) / ws.gamma).epsilon(1e-12));
  CHECK(nu(-1) == doctest::Approx(2.0 * ws.gamma).epsilon(1e-12));
  CHECK(w_partition(nu, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonicity and closed-form tables agree") {
  const WeightSequence ws = WeightSequence::explicit_family(1.25);
  const NuTable h = build_nu(ws, 20000, NuMethod::harmonicity);
  for (long k = -20; k <= 20; ++k)
    if (k != 0) CHECK(h(k) == doctest::Approx(table()(k)).epsilon(1e-6));
}

TEST_CASE("f_down grows like l^(theta + 1/2)") {
  const NuTable& nu = table();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (long l = 50; l <= 500; l += 10) {
    const double x = std::log(static_cast<double>(l)), y = std::log(f_down(nu, l));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope - 1.75) <= 0.05);
}

TEST_CASE("W asymptotics at K/2") {
  const NuTable& nu = table();
  CHECK(std::abs(scaled_w_partition(nu, 50000) / scaled_w_asymptotic(nu.weights(), 50000) - 1.0) <= 0.05);
}

TEST_CASE("perimeter chains") {
  const NuTable& nu = table();
  CHECK(chain_total_mass(ChainRegime::infinite, 1, nu) == doctest::Approx(1.0).epsilon(1e-8));
  for (long m : {1L, 7L, 40L})
    CHECK(chain_probability(ChainRegime::pointed, m, -m, nu) ==
          doctest::Approx(nu(-m) * h_down(0.0) / h_down(static_cast<double>(m))).epsilon(1e-12));
  CHECK(chain_probability(ChainRegime::infinite, 3, -3, nu) == 0.0);

  Rng rng = replicate_rng(31, 0);
  long m = 200;
  for (int s = 0; s < 20000; ++s) {
    const long next = step_perimeter_chain(ChainRegime::locally_largest, m, nu, rng);
    REQUIRE(2 * next >= m - 1);
    m = next > 0 ? next : 200;
  }
  CHECK_THROWS_AS(chain_regime_from_string("sideways"), DomainError);
}

TEST_CASE("peeling kernel") {
  const NuTable& nu = table();
  const PeelKernel& k = kernel();
  // G(0,0) on a hole of half-perimeter 1 closes it: probability W^(0)^2 / W^(1)
  CHECK(k.weight(PeelLaw::free, 1, -1) == doctest::Approx(1.0 / w_partition(nu, 1)).epsilon(1e-12));
  for (PeelLaw law : {PeelLaw::free, PeelLaw::pointed, PeelLaw::infinite})
    for (long m = 1; m <= 50; ++m) CHECK(k.total_mass(law, m) == doctest::Approx(1.0).epsilon(1e-8));
  for (long m = 1; m <= 30; ++m) {
    CHECK(k.expected_f_up_after(m) == doctest::Approx(f_up(nu, m)).epsilon(1e-8));
    CHECK(k.expected_area_after(m) == doctest::Approx(f_down(nu, m)).epsilon(1e-8));
  }
}

TEST_CASE("peeling events change perimeters as declared") {
  ExploredMap map(4, PeelLaw::free);
  PeelEvent c;
  c.kind = PeelEvent::Kind::C;
  c.k = 3;
  map.apply(c);
  CHECK(map.half_perimeters() == std::vector<long>{6});
  PeelEvent g;
  g.kind = PeelEvent::Kind::G;
  g.k1 = 2;
  g.k2 = 3;
  map.apply(g);
  CHECK(map.half_perimeters() == std::vector<long>{3, 2});
  CHECK(map.euler() == 2);
  CHECK(map.parity_violations() == 0);
  CHECK_NOTHROW(map.check_invariants());
}

TEST_CASE("functionals of the initial map") {
  const ExploredMap map(5, PeelLaw::free);
  const auto [fu, fa] = cycle_area_functionals(map, table());
  CHECK(fu == doctest::Approx(f_up(table(), 5)));
  CHECK(fa == doctest::Approx(f_down(table(), 5)));
}

TEST_CASE("completed maps satisfy Euler's relation") {
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng = replicate_rng(32, s);
    const PeelOutcome out = peel_until_done(3, kernel(), rng, 10000000);
    REQUIRE_FALSE(out.censored);
    CHECK(out.euler_residual == 0);
    CHECK(out.parity_violations == 0);
    CHECK(out.vertices - out.edges + out.faces + 1 == 2);
  }
}

TEST_CASE("event logs are reproducible") {
  std::ostringstream a, b;
  Rng r1 = replicate_rng(33, 1), r2 = replicate_rng(33, 1);
  peel_until_done(2, kernel(), r1, 1000000, &a);
  peel_until_done(2, kernel(), r2, 1000000, &b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("\"kind\"") != std::string::npos);
}

TEST_CASE("layers") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng = replicate_rng(34, s);
    const LayerRun run = layer_peel(20, PeelLaw::free, kernel(), rng, 1000, 10000000);
    REQUIRE(!run.layers.empty());
    CHECK(run.layers[0] == std::vector<long>{20});
    if (!run.truncated) CHECK(run.closures == run.cycles_created);
    for (const auto& layer : run.layers) CHECK(std::is_sorted(layer.rbegin(), layer.rend()));
  }
}
