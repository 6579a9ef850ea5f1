#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfpeel/levy.hpp"
#include "gfpeel/nu_table.hpp"
#include "gfpeel/peeling.hpp"
#include "gfpeel/statistics.hpp"

namespace gfpeel {

// Scaling constants of a weight sequence: time scale of the perimeter chains
// (c_q), height scale of the slicing (a_q) and volume scale (b_q).
struct Constants {
  double c_q = 0.0;
  double a_q = 0.0;
  double b_q = 0.0;
};

// Defining formulas evaluated from (theta, c, gamma) of the weights; a_q from
// the nu table with tail completion (infinite for theta <= 1).
Constants weight_constants(const NuTable& nu);
// Closed forms for the explicit family:
//   c_q = sqrt(pi) Gamma(theta + 1/2) / (2 Gamma(theta + 1)),  b_q = 1/Gamma(theta + 3/2),
//   a_q = 1 + 1/(4(theta - 1)) for theta > 1, infinite otherwise.
Constants explicit_family_constants(double theta);

// One pass/fail line of a suite or experiment.
struct Check {
  std::string name;
  double statistic = 0.0;
  std::string relation;  // "<=", ">=", ">" or "<"
  double threshold = 0.0;
  bool pass = false;
  long replicates = 0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  std::string line() const;
};

Check make_check(std::string name, double statistic, std::string relation, double threshold,
                 long replicates = 0, double wall_seconds = 0.0);

// Raw draws kept for CSV export; empty weights mean equal weights.
struct SampleSet {
  std::string label;
  long l = 0;
  std::vector<double> values;
  std::vector<double> weights;
};

struct Report {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<SampleSet> samples;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  bool pass() const;
  // {experiment, pass, metrics{..., checks[...]}, warnings[...]}
  nlohmann::json summary() const;
  // Check by name; throws DomainError if absent.
  const Check& check(const std::string& name) const;
};

// Columns experiment, label, l, value, weight.
void write_samples_csv(std::ostream& os, const Report& report);

struct Tolerances {
  double ks_p = 0.01;
  double ks_p_cross = 0.001;
  double z = 4.0;
  double slope = 0.3;
  double censored_fraction = 0.01;
};

struct ExperimentConfig {
  std::string name;  // area_law | perimeter_scaling | slicing | intrinsic_area
  double theta = 1.25;
  std::vector<long> perimeter_list{50};
  long replicates = 10000;
  std::uint64_t seed = 0;
  Tolerances tolerances;
  std::string output_path;  // directory for CSV and summary JSON; empty for none

  double t = 0.5;
  std::vector<std::string> regimes{"infinite", "pointed", "locally_largest"};
  long stable_replicates = 100000;
  int permutations = 1000;
  long k_max = 100000;
  long budget = 100000000;
  double trunc_epsilon = 1e-2;
  double dt = 1e-2;
  long gf_replicates = 0;  // intrinsic-area replicates for the area law (0 = skip)
  double area_floor = 3e-2;  // intrinsic area: subtrees born below this size enter by their mean
};

// Throws SchemaError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

// Samples of l^{-(theta+1/2)} |B^(l)| / b_q, with |B^(l)| the vertex count of a free map.
struct AreaSamples {
  std::vector<double> values;
  long censored = 0;
};
AreaSamples sample_rescaled_areas(const PeelKernel& kernel, long l, long n, long budget, std::uint64_t seed);

// P(floor(l^theta t)) / l for n chains started at l.
std::vector<double> sample_chain_marginal(ChainRegime regime, const NuTable& nu, long l, double t, long n,
                                          std::uint64_t seed, long* half_violations = nullptr);
// Continuous counterpart at time `time` from 1, alpha = -theta: Y+ (infinite),
// Y- (pointed) or the Eve cell of the growth-fragmentation (locally largest).
std::vector<double> sample_continuous_marginal(ChainRegime regime, double theta, double time, long n,
                                               std::uint64_t seed, double trunc_epsilon, double dt);

// Intrinsic area (the omega_- martingale limit) of n independent trees from 1 with
// alpha = 0. Children born below `floor` are pruned and enter with their mean
// size^{omega_-}, small jumps through the compensator.
std::vector<double> intrinsic_area_law(const CumulantFunction& kappa, long n, std::uint64_t seed,
                                       double floor = 3e-2, double trunc_epsilon = 1e-2, double dt = 1e-2);

Report experiment_area_law(const ExperimentConfig& cfg, const NuTable& nu);
Report experiment_perimeter_scaling(const ExperimentConfig& cfg, ChainRegime regime, const NuTable& nu);
Report experiment_slicing(const ExperimentConfig& cfg, const NuTable& nu);
Report experiment_intrinsic_area(const ExperimentConfig& cfg);

// Builds the nu table of the explicit family, dispatches on cfg.name and
// writes <output_path>/<name>_summary.json (plus CSV samples) when requested.
std::vector<Report> run_experiment(const ExperimentConfig& cfg);

}  // namespace gfpeel
