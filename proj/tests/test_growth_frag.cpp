#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "gfpeel/errors.hpp"
#include "gfpeel/growth_frag.hpp"
#include "gfpeel/parallel.hpp"
#include "gfpeel/statistics.hpp"

using namespace gfpeel;

namespace {

// Gaussian part, drift -1 and one atom at -ln 2: kappa(q) = q^2/2 - q/2 + 2^{1-q} - 1.
CumulantFunction atom_cumulant() {
  LevyCharacteristics c;
  c.sigma2 = 1.0;
  c.b = -1.0;
  c.measure = atomic_measure({{-std::log(2.0), 1.0}});
  CumulantFunction k = make_cumulant(c, {0.0, 20.0});
  const RootPair r = find_roots(k, {0.5, 20.0});
  k.omega_minus = r.omega_minus;
  k.omega_plus = r.omega_plus;
  return k;
}

std::vector<double> eve_only_values(const CumulantFunction& k, double w, std::size_t n, std::uint64_t seed,
                                    double horizon = kInf) {
  Truncation tr;
  tr.min_birth_size = 1e-6;
  tr.max_generation = 0;
  tr.horizon = horizon;
  const CellSystemSampler gf(k, tr);
  std::vector<double> v(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(seed, i);
    v[i] = genealogical_martingale(gf.sample(1.0, rng), 0, w).total();
  });
  return v;
}

}  // namespace

TEST_CASE("atom cumulant has the expected roots") {
  const CumulantFunction k = atom_cumulant();
  REQUIRE(k.omega_plus);
  CHECK(k(*k.omega_plus) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("generation cap 0 keeps Eve only; the ledger holds her jumps") {
  const CumulantFunction k = atom_cumulant();
  Truncation tr;
  tr.min_birth_size = 1e-6;
  tr.max_generation = 0;
  tr.horizon = 5.0;
  const CellSystemSampler gf(k, tr);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = replicate_rng(21, s);
    const CellSystem cs = gf.sample(1.0, rng);
    REQUIRE(cs.cells.size() == 1);
    std::vector<double> kids;
    for (const LedgerEntry& e : cs.ledger)
      if (e.kind == LedgerEntry::Kind::pruned_child) kids.push_back(e.size);
    const std::vector<Jump>& jumps = cs.cells[0].path.neg_jumps;
    REQUIRE(kids.size() == jumps.size());
    for (std::size_t i = 0; i < kids.size(); ++i) CHECK(kids[i] == doctest::Approx(jumps[i].size).epsilon(1e-14));
    // no Gaussian-hidden children for a purely atomic measure
    double w_sum = 0.0;
    for (const Jump& j : jumps) w_sum += std::pow(j.size, *k.omega_plus);
    for (const LedgerEntry& e : cs.ledger)
      if (e.kind != LedgerEntry::Kind::pruned_child) w_sum += std::pow(e.size, *k.omega_plus);
    CHECK(genealogical_martingale(cs, 0, *k.omega_plus).total() == doctest::Approx(w_sum).epsilon(1e-12));
  }
}

TEST_CASE("cell systems satisfy the birth bookkeeping") {
  const CumulantFunction k = stable_cumulant(1.25);
  Truncation tr;
  tr.min_birth_size = 1e-2;
  tr.max_generation = 3;
  const CellSystemSampler gf(k, tr);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = replicate_rng(22, s);
    const CellSystem cs = gf.sample(1.0, rng);
    CHECK_NOTHROW(cs.check_invariants());
    for (const Cell& c : cs.cells)
      if (c.parent >= 0) CHECK(c.birth_time > cs.cells[static_cast<std::size_t>(c.parent)].birth_time);
  }
}

TEST_CASE("first-generation Malthusian sum has mean x0^omega_-") {
  const CumulantFunction k = stable_cumulant(1.25);
  const McEstimate e = mean_estimate(eve_only_values(k, *k.omega_minus, 10000, 23));
  CHECK(std::abs(e.mean - 1.0) <= 4.0 * e.se);
}

TEST_CASE("snapshots") {
  const CumulantFunction k = stable_cumulant(1.25);
  Truncation tr;
  tr.min_birth_size = 1e-2;
  tr.max_generation = 2;
  const CellSystemSampler gf(k, tr);
  Rng rng = replicate_rng(24, 0);
  const CellSystem cs = gf.sample(2.0, rng);
  const GFSnapshot s0 = snapshot(cs, 0.0);
  REQUIRE(s0.entries.size() == 1);
  CHECK(s0.entries[0].size == doctest::Approx(2.0));
  CHECK(s0.entries[0].generation == 0);

  GFSnapshot one;
  one.entries.push_back({3.0, 0});
  CHECK(temporal_martingale(one, 1.5).total() == doctest::Approx(std::pow(3.0, 1.5)));
}

TEST_CASE("generation cap is enforced") {
  const CumulantFunction k = stable_cumulant(1.25);
  Truncation tr;
  tr.max_generation = 1;
  const CellSystemSampler gf(k, tr);
  Rng rng = replicate_rng(25, 0);
  const CellSystem cs = gf.sample(1.0, rng);
  CHECK_THROWS_AS(genealogical_martingale(cs, 2, *k.omega_minus), DomainError);
  CHECK_THROWS_AS(CellSystemSampler(k, Truncation{0.0, 1, kInf}), DomainError);
}

TEST_CASE("intrinsic area with cap 0 is the first-generation sum") {
  const CumulantFunction k = stable_cumulant(1.25);
  Truncation tr;
  tr.min_birth_size = 1e-4;
  tr.max_generation = 0;
  const CellSystemSampler gf(k, tr);
  Rng rng = replicate_rng(26, 0);
  const CellSystem cs = gf.sample(1.0, rng);
  CHECK(intrinsic_area(cs).total() == doctest::Approx(genealogical_martingale(cs, 0, *k.omega_minus).total()));
}

TEST_CASE("sampling is a pure function of the seed") {
  const CumulantFunction k = stable_cumulant(1.25);
  Truncation tr;
  tr.min_birth_size = 1e-2;
  tr.max_generation = 2;
  const CellSystemSampler gf(k, tr);
  std::ostringstream a, b;
  Rng r1 = replicate_rng(27, 5), r2 = replicate_rng(27, 5);
  write_system_ndjson(a, gf.sample(1.0, r1));
  write_system_ndjson(b, gf.sample(1.0, r2));
  CHECK(a.str() == b.str());
  CHECK(!a.str().empty());
}

TEST_CASE("spine marked jumps are Poisson with mean -Psi(omega_+) T") {
  const CumulantFunction k = stable_cumulant(1.25);
  const double T = 3.0;
  const std::size_t n = 2000;
  std::vector<double> counts(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(28, i);
    const SpineSample s = sample_spine(SpineSign::plus, k, 1.0, T, rng);
    counts[i] = static_cast<double>(
        std::count_if(s.marked_eta_times.begin(), s.marked_eta_times.end(), [&](double x) { return x <= T; }));
  });
  const McEstimate e = mean_estimate(counts);
  CHECK(std::abs(e.mean + psi_eval(k.chars, *k.omega_plus) * T) <= 4.0 * e.se);
}

TEST_CASE("many-to-one at t = 0 is exact") {
  const CumulantFunction k = stable_cumulant(1.25);
  const ManyToOneResult r = many_to_one_check(k, [](double y) { return y * y; }, 0.0, 1.5, 10, 29, Truncation{});
  CHECK(r.lhs == doctest::Approx(2.25));
  CHECK(r.rhs == doctest::Approx(2.25));
}

namespace {

McEstimate temporal_mean(const CumulantFunction& k, double w, double t, std::size_t n, std::uint64_t seed,
                         double floor) {
  Truncation tr;
  tr.min_birth_size = floor;
  tr.max_generation = 60;
  tr.horizon = t;
  const CellSystemSampler gf(k, tr);
  std::vector<double> v(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(seed, i);
    v[i] = temporal_martingale(snapshot(gf.sample(1.0, rng), t), w).total();
  });
  return mean_estimate(v);
}

}  // namespace

TEST_CASE("temporal M- has constant mean at alpha = 0") {
  const CumulantFunction k = atom_cumulant();
  const double w = *k.omega_minus;
  const McEstimate a = temporal_mean(k, w, 0.5, 4000, 30, 1e-3);
  const McEstimate b = temporal_mean(k, w, 2.0, 4000, 31, 1e-3);
  CHECK(std::abs(a.mean - 1.0) <= 4.0 * a.se);
  CHECK(std::abs(b.mean - 1.0) <= 4.0 * b.se);
}

TEST_CASE("temporal M+ does not increase for alpha > 0") {
  CumulantFunction k = atom_cumulant();
  k.chars.alpha = 0.5;
  const double w = *k.omega_plus;
  const McEstimate a = temporal_mean(k, w, 0.5, 4000, 32, 1e-3);
  const McEstimate b = temporal_mean(k, w, 2.0, 4000, 33, 1e-3);
  CHECK(a.mean <= 1.0 + 4.0 * a.se);
  CHECK(b.mean <= a.mean + 4.0 * std::hypot(a.se, b.se));
}

TEST_CASE("genealogical M-(n) settles as n grows") {
  const CumulantFunction k = stable_cumulant(1.25);
  const double w = *k.omega_minus;
  Truncation tr;
  tr.min_birth_size = 3e-2;
  tr.max_generation = 4;
  const CellSystemSampler gf(k, tr);
  const std::size_t n = 500;
  std::vector<std::array<double, 4>> step(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(34, i);
    const CellSystem cs = gf.sample(1.0, rng);
    for (int g = 0; g < 4; ++g)
      step[i][g] = std::abs(genealogical_martingale(cs, g + 1, w).total() - genealogical_martingale(cs, g, w).total());
  });
  std::array<double, 4> mean{};
  for (const auto& s : step)
    for (int g = 0; g < 4; ++g) mean[g] += s[g] / static_cast<double>(n);
  for (int g = 1; g < 4; ++g) CHECK(mean[g] < mean[g - 1]);
}
