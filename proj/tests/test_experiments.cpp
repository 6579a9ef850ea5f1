#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gfpeel/errors.hpp"
#include "gfpeel/experiments.hpp"
#include "gfpeel/growth_frag.hpp"
#include "gfpeel/statistics.hpp"

using namespace gfpeel;

TEST_CASE("constants agree across the two routes") {
  for (double theta : {1.1, 1.25, 1.4}) {
    const NuTable nu = build_nu(WeightSequence::explicit_family(theta), 100000, NuMethod::closed_form);
    const Constants a = weight_constants(nu);
    const Constants b = explicit_family_constants(theta);
    CHECK(a.c_q == doctest::Approx(b.c_q).epsilon(1e-10));
    CHECK(a.b_q == doctest::Approx(b.b_q).epsilon(1e-10));
    CHECK(a.a_q == doctest::Approx(b.a_q).epsilon(1e-10));
  }
  CHECK(std::isinf(explicit_family_constants(0.9).a_q));
}

TEST_CASE("a_q matches its defining sum") {
  const NuTable nu = build_nu(WeightSequence::explicit_family(1.25), 100000, NuMethod::closed_form);
  double direct = nu(0);
  for (long k = 1; k <= nu.k_max(); ++k) direct += (2.0 * k + 1.0) * nu(k);
  // the tail beyond k_max is of order k_max^{1 - theta}
  const double tail = nu.positive_sum(nu.k_max(), [](double x) { return 2.0 * x + 1.0; }, 1.0);
  CHECK(0.5 * (1.0 + direct + tail) == doctest::Approx(weight_constants(nu).a_q).epsilon(1e-8));
}

TEST_CASE("config parsing") {
  const nlohmann::json good = {{"name", "area_law"}, {"theta", 1.25}, {"perimeter_list", {50}},
                               {"replicates", 100},  {"seed", 7},     {"tolerances", {{"z", 4.0}}}};
  const ExperimentConfig c = config_from_json(good);
  CHECK(c.name == "area_law");
  CHECK(c.perimeter_list == std::vector<long>{50});
  CHECK(config_from_json(to_json(c)).seed == 7);

  auto field_of = [](nlohmann::json j) -> std::string {
    try {
      config_from_json(j);
    } catch (const SchemaError& e) {
      return e.field();
    }
    return "";
  };
  nlohmann::json j = good;
  j.erase("seed");
  CHECK(field_of(j) == "seed");
  j = good;
  j["theta"] = "big";
  CHECK(field_of(j) == "theta");
  j = good;
  j["colour"] = 1;
  CHECK(field_of(j) == "colour");
  j = good;
  j["perimeter_list"] = {50, -1};
  CHECK(field_of(j) == "perimeter_list[1]");
  j = good;
  j["regimes"] = {"infinite", "sideways"};
  CHECK(field_of(j) == "regimes[1]");
  j = good;
  j["tolerances"]["ks_p"] = -1;
  CHECK(field_of(j) == "tolerances.ks_p");
  j = good;
  j["name"] = "slicing";
  j["theta"] = 0.9;
  CHECK(field_of(j) == "theta");
}

TEST_CASE("chain and continuous marginals are reproducible") {
  const NuTable nu = build_nu(WeightSequence::explicit_family(1.25), 100000, NuMethod::closed_form);
  long bad = -1;
  const auto a = sample_chain_marginal(ChainRegime::locally_largest, nu, 50, 0.5, 200, 5, &bad);
  const auto b = sample_chain_marginal(ChainRegime::locally_largest, nu, 50, 0.5, 200, 5, nullptr);
  CHECK(a == b);
  CHECK(bad == 0);
  const auto c = sample_continuous_marginal(ChainRegime::infinite, 1.25, 0.2, 50, 6, 1e-2, 1e-2);
  CHECK(c == sample_continuous_marginal(ChainRegime::infinite, 1.25, 0.2, 50, 6, 1e-2, 1e-2));
  for (double x : c) CHECK(x >= 0.0);
}

TEST_CASE("experiment summary file") {
  const auto dir = std::filesystem::temp_directory_path() / "gfpeel_experiment_test";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.name = "intrinsic_area";
  cfg.theta = 1.25;
  cfg.replicates = 300;
  cfg.stable_replicates = 1000;
  cfg.permutations = 50;
  cfg.area_floor = 0.1;
  cfg.seed = 3;
  cfg.output_path = dir.string();
  const std::vector<Report> reports = run_experiment(cfg);
  REQUIRE(reports.size() == 1);
  std::ifstream in(dir / "intrinsic_area_summary.json");
  REQUIRE(in);
  const nlohmann::json s = nlohmann::json::parse(in);
  CHECK(s.contains("experiment"));
  CHECK(s.contains("pass"));
  CHECK(s["metrics"].contains("reports"));
  for (const Check& c : reports[0].checks) {
    CHECK(c.replicates > 0);
    CHECK(c.wall_seconds >= 0.0);
  }
  CHECK(std::filesystem::exists(dir / "intrinsic_area_samples.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("intrinsic area solves its fixed-point equation in law") {
  const CumulantFunction k = stable_cumulant(1.25);
  const double w = *k.omega_minus;
  const std::size_t n = 2000;
  const double floor = 0.1;
  const std::vector<double> direct = intrinsic_area_law(k, static_cast<long>(n), 41, floor);
  const std::vector<double> copies = intrinsic_area_law(k, static_cast<long>(n), 42, floor);
  CumulantFunction k0 = k;
  k0.chars.alpha = 0.0;
  Truncation tr;
  tr.min_birth_size = 1e-3;
  tr.max_generation = 0;
  const CellSystemSampler eve(k0, tr);
  std::vector<double> rebuilt(n);
  std::size_t next = 0;
  Rng pick = replicate_rng(43, 0);
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = replicate_rng(44, i);
    const CellSystem cs = eve.sample(1.0, rng);
    double jumps = 0.0;
    double s = 0.0;
    for (const LedgerEntry& e : cs.ledger) {
      const double x = std::pow(e.size, w);
      jumps += x;
      // below the floor both sides use the mean
      if (e.size < floor)
        s += x;
      else
        s += x * (next < n ? copies[next++] : copies[any(pick)]);
    }
    rebuilt[i] = s + genealogical_martingale(cs, 0, w).total() - jumps;  // plus the compensator
  }
  const KsTest ks = ks_permutation_test(WeightedSample(direct), WeightedSample(rebuilt), 200, 45);
  CHECK(ks.p_value >= 0.01);
}
