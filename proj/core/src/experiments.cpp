#include "gfpeel/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "gfpeel/errors.hpp"
#include "gfpeel/growth_frag.hpp"
#include "gfpeel/numerics.hpp"
#include "gfpeel/parallel.hpp"
#include "gfpeel/random.hpp"
#include "gfpeel/ssmp.hpp"
#include "gfpeel/stable.hpp"

namespace gfpeel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent generator streams of one experiment.
enum Stream : std::uint64_t {
  kMaps = 1,
  kStable = 2,
  kChain = 3,
  kContinuous = 4,
  kLayers = 5,
  kCells = 6,
  kAreaTrees = 7,
  kPermutation = 9,
};

Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return replicate_rng(seed, (stream << 40) ^ index);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  Rng r = stream_rng(seed, stream, index);
  return r();
}

double z_score(const McEstimate& e, double target) {
  if (!(e.se > 0.0)) return e.mean == target ? 0.0 : kInf;
  return std::abs(e.mean - target) / e.se;
}

nlohmann::json estimate_json(const McEstimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

std::vector<double> finite_only(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

}  // namespace

Constants weight_constants(const NuTable& nu) {
  const WeightSequence& ws = nu.weights();
  const double theta = ws.theta;
  const double cosine = std::cos((1.0 + theta) * kPi);
  Constants k;
  k.c_q = kPi * ws.c / (std::tgamma(1.0 + theta) * cosine);
  k.b_q = 2.0 * ws.gamma * cosine / (ws.c * std::sqrt(kPi));
  if (theta <= 1.0) {
    k.a_q = kInf;
  } else {
    const double s = nu(0) + nu.positive_sum(0, [](double x) { return 2.0 * x + 1.0; }, 1.0);
    k.a_q = 0.5 * (1.0 + s);
  }
  return k;
}

Constants explicit_family_constants(double theta) {
  if (!(theta > 0.5 && theta < 1.5)) throw DomainError("explicit_family_constants: theta must lie in (1/2, 3/2)");
  Constants k;
  k.c_q = std::sqrt(kPi) * gamma_fn(theta + 0.5) / (2.0 * gamma_fn(theta + 1.0));
  k.b_q = 1.0 / gamma_fn(theta + 1.5);
  k.a_q = theta > 1.0 ? 1.0 + 1.0 / (4.0 * (theta - 1.0)) : kInf;
  return k;
}

// ---------------------------------------------------------------------------

nlohmann::json Check::to_json() const {
  return {{"name", name},         {"statistic", statistic}, {"relation", relation},
          {"threshold", threshold}, {"pass", pass},         {"replicates", replicates},
          {"wall_seconds", wall_seconds}};
}

std::string Check::line() const {
  std::ostringstream os;
  os << (pass ? "PASS " : "FAIL ") << name << ": " << std::setprecision(6) << statistic << ' ' << relation << ' '
     << threshold;
  if (replicates > 0) os << " (n=" << replicates << ")";
  os << std::fixed << std::setprecision(1) << " [" << wall_seconds << " s]";
  return os.str();
}

Check make_check(std::string name, double statistic, std::string relation, double threshold, long replicates,
                 double wall_seconds) {
  Check c;
  c.name = std::move(name);
  c.statistic = statistic;
  c.relation = std::move(relation);
  c.threshold = threshold;
  c.replicates = replicates;
  c.wall_seconds = wall_seconds;
  if (c.relation == "<=")
    c.pass = statistic <= threshold;
  else if (c.relation == "<")
    c.pass = statistic < threshold;
  else if (c.relation == ">=")
    c.pass = statistic >= threshold;
  else if (c.relation == ">")
    c.pass = statistic > threshold;
  else
    throw DomainError("make_check: unknown relation " + c.relation);
  return c;
}

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json Report::summary() const {
  nlohmann::json m = metrics;
  m["checks"] = nlohmann::json::array();
  for (const Check& c : checks) m["checks"].push_back(c.to_json());
  m["wall_seconds"] = wall_seconds;
  return {{"experiment", experiment}, {"pass", pass()}, {"metrics", m}, {"warnings", warnings}};
}

const Check& Report::check(const std::string& name) const {
  for (const Check& c : checks)
    if (c.name == name) return c;
  throw DomainError("Report::check: no check named " + name);
}

void write_samples_csv(std::ostream& os, const Report& report) {
  os << "experiment,label,l,value,weight\n";
  os << std::setprecision(17);
  for (const SampleSet& s : report.samples) {
    const double w = s.values.empty() ? 0.0 : 1.0 / static_cast<double>(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i)
      os << report.experiment << ',' << s.label << ',' << s.l << ',' << s.values[i] << ','
         << (s.weights.empty() ? w : s.weights[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

double number_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.at(key).is_number()) throw SchemaError(path + key, "must be a number");
  return j.at(key).get<double>();
}

long integer_field(const nlohmann::json& j, const std::string& key, const std::string& path, long min) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_number_integer()) throw SchemaError(path + key, "must be an integer");
  const long x = v.get<long>();
  if (x < min) throw SchemaError(path + key, "must be >= " + std::to_string(min));
  return x;
}

double positive_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const double x = number_field(j, key, path);
  if (!(x > 0.0)) throw SchemaError(path + key, "must be > 0");
  return x;
}

const std::set<std::string> kExperimentNames{"area_law", "perimeter_scaling", "slicing", "intrinsic_area"};

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("<root>", "config must be a JSON object");
  static const std::set<std::string> known{
      "name",       "theta",          "perimeter_list", "replicates",   "seed",          "tolerances",
      "output_path", "t",             "regimes",        "stable_replicates", "permutations", "k_max",
      "budget",     "trunc_epsilon",  "dt",             "gf_replicates", "area_floor"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw SchemaError(it.key(), "unknown field");
  for (const char* req : {"name", "theta", "perimeter_list", "replicates", "seed"})
    if (!j.contains(req)) throw SchemaError(req, "required field is missing");

  ExperimentConfig c;
  if (!j["name"].is_string()) throw SchemaError("name", "must be a string");
  c.name = j["name"].get<std::string>();
  if (!kExperimentNames.count(c.name))
    throw SchemaError("name", "must be one of area_law, perimeter_scaling, slicing, intrinsic_area");
  c.theta = number_field(j, "theta", "");
  if (!(c.theta > 0.5 && c.theta < 1.5)) throw SchemaError("theta", "must lie in (1/2, 3/2)");
  if (!j["perimeter_list"].is_array() || j["perimeter_list"].empty())
    throw SchemaError("perimeter_list", "must be a nonempty array");
  c.perimeter_list.clear();
  for (std::size_t i = 0; i < j["perimeter_list"].size(); ++i) {
    const nlohmann::json& v = j["perimeter_list"][i];
    const std::string path = "perimeter_list[" + std::to_string(i) + "]";
    if (!v.is_number_integer() || v.get<long>() < 1) throw SchemaError(path, "must be an integer >= 1");
    c.perimeter_list.push_back(v.get<long>());
  }
  c.replicates = integer_field(j, "replicates", "", 1);
  if (!j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<long long>() < 0))
    throw SchemaError("seed", "must be a nonnegative integer");
  c.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("tolerances")) {
    const nlohmann::json& t = j["tolerances"];
    if (!t.is_object()) throw SchemaError("tolerances", "must be an object");
    static const std::set<std::string> tol_keys{"ks_p", "ks_p_cross", "z", "slope", "censored_fraction"};
    for (auto it = t.begin(); it != t.end(); ++it)
      if (!tol_keys.count(it.key())) throw SchemaError("tolerances." + it.key(), "unknown field");
    if (t.contains("ks_p")) c.tolerances.ks_p = positive_field(t, "ks_p", "tolerances.");
    if (t.contains("ks_p_cross")) c.tolerances.ks_p_cross = positive_field(t, "ks_p_cross", "tolerances.");
    if (t.contains("z")) c.tolerances.z = positive_field(t, "z", "tolerances.");
    if (t.contains("slope")) c.tolerances.slope = positive_field(t, "slope", "tolerances.");
    if (t.contains("censored_fraction"))
      c.tolerances.censored_fraction = positive_field(t, "censored_fraction", "tolerances.");
  }
  if (j.contains("output_path")) {
    if (!j["output_path"].is_string()) throw SchemaError("output_path", "must be a string");
    c.output_path = j["output_path"].get<std::string>();
  }
  if (j.contains("t")) c.t = positive_field(j, "t", "");
  if (j.contains("regimes")) {
    if (!j["regimes"].is_array() || j["regimes"].empty()) throw SchemaError("regimes", "must be a nonempty array");
    c.regimes.clear();
    for (std::size_t i = 0; i < j["regimes"].size(); ++i) {
      const std::string path = "regimes[" + std::to_string(i) + "]";
      if (!j["regimes"][i].is_string()) throw SchemaError(path, "must be a string");
      const std::string r = j["regimes"][i].get<std::string>();
      try {
        chain_regime_from_string(r);
      } catch (const std::exception&) {
        throw SchemaError(path, "must be infinite, pointed or locally_largest");
      }
      c.regimes.push_back(r);
    }
  }
  if (j.contains("stable_replicates")) c.stable_replicates = integer_field(j, "stable_replicates", "", 1);
  if (j.contains("permutations")) c.permutations = static_cast<int>(integer_field(j, "permutations", "", 1));
  if (j.contains("k_max")) c.k_max = integer_field(j, "k_max", "", 16);
  if (j.contains("budget")) c.budget = integer_field(j, "budget", "", 1);
  if (j.contains("trunc_epsilon")) c.trunc_epsilon = positive_field(j, "trunc_epsilon", "");
  if (j.contains("dt")) c.dt = positive_field(j, "dt", "");
  if (j.contains("gf_replicates")) c.gf_replicates = integer_field(j, "gf_replicates", "", 0);
  if (j.contains("area_floor")) {
    c.area_floor = positive_field(j, "area_floor", "");
    if (!(c.area_floor < 1.0)) throw SchemaError("area_floor", "must be < 1");
  }
  if (c.name == "slicing" && !(c.theta > 1.0)) throw SchemaError("theta", "slicing needs theta in (1, 3/2)");
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"theta", c.theta},
          {"perimeter_list", c.perimeter_list},
          {"replicates", c.replicates},
          {"seed", c.seed},
          {"tolerances",
           {{"ks_p", c.tolerances.ks_p},
            {"ks_p_cross", c.tolerances.ks_p_cross},
            {"z", c.tolerances.z},
            {"slope", c.tolerances.slope},
            {"censored_fraction", c.tolerances.censored_fraction}}},
          {"output_path", c.output_path},
          {"t", c.t},
          {"regimes", c.regimes},
          {"stable_replicates", c.stable_replicates},
          {"permutations", c.permutations},
          {"k_max", c.k_max},
          {"budget", c.budget},
          {"trunc_epsilon", c.trunc_epsilon},
          {"dt", c.dt},
          {"gf_replicates", c.gf_replicates},
          {"area_floor", c.area_floor}};
}

// ---------------------------------------------------------------------------
// Samplers

AreaSamples sample_rescaled_areas(const PeelKernel& kernel, long l, long n, long budget, std::uint64_t seed) {
  if (l < 1 || n < 1) throw DomainError("sample_rescaled_areas: need l >= 1 and n >= 1");
  const NuTable& nu = kernel.nu();
  const double scale = 1.0 / (weight_constants(nu).b_q * std::pow(static_cast<double>(l), nu.theta() + 0.5));
  std::vector<double> raw(static_cast<std::size_t>(n));
  parallel_for(raw.size(), [&](std::size_t i) {
    Rng rng = stream_rng(seed, kMaps, i);
    const PeelOutcome out = peel_until_done(l, kernel, rng, budget);
    raw[i] = out.censored ? std::nan("") : scale * static_cast<double>(out.vertices);
  });
  AreaSamples s;
  s.values = finite_only(raw);
  s.censored = n - static_cast<long>(s.values.size());
  return s;
}

std::vector<double> sample_chain_marginal(ChainRegime regime, const NuTable& nu, long l, double t, long n,
                                          std::uint64_t seed, long* half_violations) {
  if (l < 1 || n < 1 || !(t >= 0.0)) throw DomainError("sample_chain_marginal: need l >= 1, n >= 1, t >= 0");
  const long steps = static_cast<long>(std::floor(std::pow(static_cast<double>(l), nu.theta()) * t));
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<long> bad(out.size(), 0);
  parallel_for(out.size(), [&](std::size_t i) {
    Rng rng = stream_rng(seed, kChain, i);
    long m = l;
    for (long s = 0; s < steps && m > 0; ++s) {
      const long next = step_perimeter_chain(regime, m, nu, rng);
      if (2 * next < m - 1) ++bad[i];
      m = next;
    }
    out[i] = static_cast<double>(m) / static_cast<double>(l);
  });
  if (half_violations) {
    *half_violations = 0;
    for (long b : bad) *half_violations += b;
  }
  return out;
}

std::vector<double> sample_continuous_marginal(ChainRegime regime, double theta, double time, long n,
                                               std::uint64_t seed, double trunc_epsilon, double dt) {
  if (n < 1 || !(time >= 0.0)) throw DomainError("sample_continuous_marginal: need n >= 1 and time >= 0");
  const CumulantFunction kappa = stable_cumulant(theta);
  LevyCharacteristics chars;
  switch (regime) {
    case ChainRegime::infinite:
      chars = shift_exponent(kappa, *kappa.omega_plus);
      break;
    case ChainRegime::pointed:
      chars = shift_exponent(kappa, *kappa.omega_minus);
      break;
    case ChainRegime::locally_largest:
      chars = kappa.chars;
      break;
  }
  const double alpha = -theta;
  const LevySampler sampler(chars, trunc_epsilon);
  std::vector<double> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), [&](std::size_t i) {
    Rng rng = stream_rng(seed, kContinuous, i);
    PathControl control;
    control.horizon = 1e4;
    control.dt = dt;
    control.xi_floor = std::log(1e-6);
    control.clock_x0 = 1.0;
    control.clock_alpha = alpha;
    control.clock_max = time;
    const LevyPath lp = sample_levy_path(sampler, control, rng);
    const PssmpPath y = lamperti_transform(lp, 1.0, alpha);
    if (const std::optional<double> v = y.value_at(time)) {
      out[i] = *v;
    } else if (lp.end == PathEnd::floor || lp.end == PathEnd::killed) {
      out[i] = 0.0;  // absorbed: below 1e-6 before the target time
    } else if (lp.end == PathEnd::clock) {
      out[i] = y.value_at(y.end_time()).value_or(std::nan(""));
    } else {
      out[i] = std::nan("");
    }
  });
  return out;
}

std::vector<double> intrinsic_area_law(const CumulantFunction& kappa, long n, std::uint64_t seed, double floor,
                                       double trunc_epsilon, double dt) {
  if (n < 1) throw DomainError("intrinsic_area_law: need n >= 1");
  if (!(floor > 0.0 && floor < 1.0)) throw DomainError("intrinsic_area_law: floor must lie in (0, 1)");
  if (!kappa.omega_minus || !kappa.omega_plus) throw DomainError("intrinsic_area_law: kappa needs both roots");
  CumulantFunction k0 = kappa;
  k0.chars.alpha = 0.0;  // the genealogy, hence the law, does not depend on alpha
  Truncation tr;
  tr.min_birth_size = floor;
  tr.max_generation = 100000;  // the floor ends every lineage long before this
  tr.horizon = kInf;
  SimulationOptions opts;
  opts.trunc_epsilon = trunc_epsilon;
  opts.dt = dt;
  const CellSystemSampler sampler(k0, tr, opts);
  std::vector<double> area(static_cast<std::size_t>(n));
  parallel_for(area.size(), [&](std::size_t i) {
    Rng rng = stream_rng(seed, kAreaTrees, i);
    area[i] = intrinsic_area(sampler.sample(1.0, rng)).total();
  });
  return area;
}

// ---------------------------------------------------------------------------
// Experiments

Report experiment_area_law(const ExperimentConfig& cfg, const NuTable& nu) {
  const auto t0 = Clock::now();
  Report rep;
  rep.experiment = "area_law";
  const double theta = nu.theta();
  const double beta = 1.0 / (theta + 0.5);
  const PeelKernel kernel(nu);
  const Constants k = weight_constants(nu);
  rep.metrics["theta"] = theta;
  rep.metrics["b_q"] = k.b_q;

  auto ts = Clock::now();
  Rng srng = stream_rng(cfg.seed, kStable, 0);
  const WeightedSample stable = inverse_size_biased_law(beta, static_cast<std::size_t>(cfg.stable_replicates), srng);
  const double stable_time = seconds_since(ts);
  const double stable_z = std::abs(stable.mean() - 1.0) / stable.mean_se();
  rep.metrics["stable"] = {{"mean", stable.mean()}, {"se", stable.mean_se()}, {"effective_size", stable.effective_size()}};
  rep.checks.push_back(make_check("stable side mean = 1 (z)", stable_z, "<=", cfg.tolerances.z,
                                  cfg.stable_replicates, stable_time));
  rep.samples.push_back({"stable", 0, stable.values(), stable.weights()});

  for (long l : cfg.perimeter_list) {
    ts = Clock::now();
    const AreaSamples maps = sample_rescaled_areas(kernel, l, cfg.replicates, cfg.budget, stream_seed(cfg.seed, kMaps, static_cast<std::uint64_t>(l)));
    const double map_time = seconds_since(ts);
    const std::string tag = "l=" + std::to_string(l);
    const double censored = static_cast<double>(maps.censored) / static_cast<double>(cfg.replicates);
    if (censored > cfg.tolerances.censored_fraction)
      rep.warnings.push_back(tag + ": " + std::to_string(maps.censored) + " censored maps (unreliable)");
    if (maps.values.size() < 2) throw AccuracyError("experiment_area_law: every map was censored", 0.0, kInf);
    const McEstimate m = mean_estimate(maps.values);
    const double exact = f_down(nu, l) / (k.b_q * std::pow(static_cast<double>(l), theta + 0.5));
    const std::size_t top = std::max<std::size_t>(2, maps.values.size() / 10);
    nlohmann::json lm = {{"mean", estimate_json(m)},
                         {"exact_mean", exact},
                         {"censored", maps.censored},
                         {"hill_tail_index_top10pct", hill_estimator(maps.values, top)},
                         {"expected_tail_index", 1.0 + beta}};
    rep.checks.push_back(make_check(tag + " map side mean = 1 (z)", z_score(m, 1.0), "<=", cfg.tolerances.z,
                                    static_cast<long>(maps.values.size()), map_time));
    ts = Clock::now();
    const KsTest ks = ks_permutation_test(WeightedSample(maps.values), stable, cfg.permutations,
                                          stream_seed(cfg.seed, kPermutation, static_cast<std::uint64_t>(l)));
    lm["ks_statistic"] = ks.statistic;
    rep.checks.push_back(make_check(tag + " KS(map side, stable side) p", ks.p_value, ">", cfg.tolerances.ks_p,
                                    static_cast<long>(maps.values.size()), seconds_since(ts)));
    rep.metrics[tag] = lm;
    rep.samples.push_back({"map", l, maps.values, {}});
  }

  if (cfg.gf_replicates > 0) {
    ts = Clock::now();
    const std::vector<double> area = intrinsic_area_law(stable_cumulant(theta), cfg.gf_replicates, stream_seed(cfg.seed, kCells, 0),
                                                        cfg.area_floor, cfg.trunc_epsilon, cfg.dt);
    const double gf_time = seconds_since(ts);
    const McEstimate m = mean_estimate(area);
    rep.metrics["growth_fragmentation"] = {{"mean", estimate_json(m)}};
    rep.checks.push_back(make_check("growth-fragmentation side mean = 1 (z)", z_score(m, 1.0), "<=",
                                    cfg.tolerances.z, cfg.gf_replicates, gf_time));
    const KsTest ks = ks_permutation_test(WeightedSample(area), stable, cfg.permutations,
                                          stream_seed(cfg.seed, kPermutation, 0));
    rep.checks.push_back(make_check("KS(growth-fragmentation side, stable side) p", ks.p_value, ">",
                                    cfg.tolerances.ks_p, cfg.gf_replicates, gf_time));
    rep.samples.push_back({"growth_fragmentation", 0, area, {}});
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

Report experiment_perimeter_scaling(const ExperimentConfig& cfg, ChainRegime regime, const NuTable& nu) {
  const auto t0 = Clock::now();
  Report rep;
  rep.experiment = "perimeter_scaling/" + to_string(regime);
  const double theta = nu.theta();
  std::vector<long> ls = cfg.perimeter_list;
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  const Constants k = weight_constants(nu);
  rep.metrics["c_q"] = k.c_q;
  rep.metrics["t"] = cfg.t;

  std::vector<std::vector<double>> marginals;
  long violations = 0;
  for (long l : ls) {
    const auto ts = Clock::now();
    long bad = 0;
    marginals.push_back(sample_chain_marginal(regime, nu, l, cfg.t, cfg.replicates,
                                              stream_seed(cfg.seed, kChain, static_cast<std::uint64_t>(l)), &bad));
    violations += bad;
    const std::vector<double>& v = marginals.back();
    const double absorbed =
        static_cast<double>(std::count(v.begin(), v.end(), 0.0)) / static_cast<double>(v.size());
    rep.metrics["l=" + std::to_string(l)] = {{"mean", estimate_json(mean_estimate(v))},
                                             {"absorbed_fraction", absorbed},
                                             {"steps", std::floor(std::pow(static_cast<double>(l), theta) * cfg.t)},
                                             {"wall_seconds", seconds_since(ts)}};
    rep.samples.push_back({"chain", l, v, {}});
  }
  if (regime == ChainRegime::locally_largest)
    rep.checks.push_back(make_check("steps below half", static_cast<double>(violations), "<=", 0.0,
                                    cfg.replicates * static_cast<long>(ls.size())));

  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto ts = Clock::now();
    const KsTest ks = ks_permutation_test(WeightedSample(marginals[i - 1]), WeightedSample(marginals[i]),
                                          cfg.permutations, stream_seed(cfg.seed, kPermutation, i));
    rep.checks.push_back(make_check("stabilization KS(l=" + std::to_string(ls[i - 1]) + ", l=" +
                                        std::to_string(ls[i]) + ") p",
                                    ks.p_value, ">", cfg.tolerances.ks_p, cfg.replicates, seconds_since(ts)));
  }

  const auto ts = Clock::now();
  const std::vector<double> cont_raw = sample_continuous_marginal(
      regime, theta, k.c_q * cfg.t, cfg.replicates, stream_seed(cfg.seed, kContinuous, 0), cfg.trunc_epsilon, cfg.dt);
  const std::vector<double> cont = finite_only(cont_raw);
  if (cont.size() < cont_raw.size())
    rep.warnings.push_back(std::to_string(cont_raw.size() - cont.size()) + " continuous paths censored");
  const KsTest ks = ks_permutation_test(WeightedSample(marginals.back()), WeightedSample(cont), cfg.permutations,
                                        stream_seed(cfg.seed, kPermutation, 1000));
  rep.metrics["continuous"] = {{"time", k.c_q * cfg.t}, {"mean", estimate_json(mean_estimate(cont))}};
  rep.checks.push_back(make_check("discrete(l=" + std::to_string(ls.back()) + ") vs continuous KS p", ks.p_value,
                                  ">", cfg.tolerances.ks_p_cross, static_cast<long>(cont.size()),
                                  seconds_since(ts)));
  rep.samples.push_back({"continuous", 0, cont, {}});
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

Report experiment_slicing(const ExperimentConfig& cfg, const NuTable& nu) {
  const auto t0 = Clock::now();
  const double theta = nu.theta();
  if (!(theta > 1.0)) throw DomainError("experiment_slicing: needs the dilute phase theta in (1, 3/2)");
  Report rep;
  rep.experiment = "slicing";
  const PeelKernel kernel(nu);
  const Constants k = weight_constants(nu);
  rep.metrics["a_q"] = k.a_q;
  rep.metrics["c_q"] = k.c_q;
  std::vector<long> ls = cfg.perimeter_list;
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());

  constexpr int kRanks = 3;
  std::vector<std::array<std::vector<double>, kRanks>> ranked;
  long bad_start = 0;
  double t_eff = cfg.t;
  for (long l : ls) {
    const auto ts = Clock::now();
    const int r = static_cast<int>(std::floor(std::pow(static_cast<double>(l), theta - 1.0) * cfg.t));
    // Heights are integers; the rescaled time actually reached is r / l^(theta-1).
    t_eff = r / std::pow(static_cast<double>(l), theta - 1.0);
    const std::size_t n = static_cast<std::size_t>(cfg.replicates);
    std::vector<std::array<double, kRanks>> top(n);
    std::vector<char> truncated(n, 0), start_ok(n, 1);
    const std::uint64_t seed = stream_seed(cfg.seed, kLayers, static_cast<std::uint64_t>(l));
    parallel_for(n, [&](std::size_t i) {
      Rng rng = stream_rng(seed, kLayers, i);
      const LayerRun run = layer_peel(l, PeelLaw::free, kernel, rng, r, cfg.budget);
      truncated[i] = run.truncated;
      start_ok[i] = !run.layers.empty() && run.layers[0] == std::vector<long>{l};
      top[i].fill(0.0);
      if (static_cast<int>(run.layers.size()) > r) {
        const std::vector<long>& layer = run.layers[static_cast<std::size_t>(r)];
        for (int j = 0; j < kRanks && j < static_cast<int>(layer.size()); ++j)
          top[i][j] = static_cast<double>(layer[j]) / static_cast<double>(l);
      }
    });
    std::array<std::vector<double>, kRanks> cols;
    long n_trunc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!start_ok[i]) ++bad_start;
      if (truncated[i]) {
        ++n_trunc;
        continue;
      }
      for (int j = 0; j < kRanks; ++j) cols[j].push_back(top[i][j]);
    }
    if (static_cast<double>(n_trunc) > cfg.tolerances.censored_fraction * static_cast<double>(n))
      rep.warnings.push_back("l=" + std::to_string(l) + ": " + std::to_string(n_trunc) + " truncated explorations");
    rep.metrics["l=" + std::to_string(l)] = {{"height", r},
                                             {"t_eff", t_eff},
                                             {"largest_mean", estimate_json(mean_estimate(cols[0]))},
                                             {"truncated", n_trunc},
                                             {"wall_seconds", seconds_since(ts)}};
    for (int j = 0; j < kRanks; ++j) rep.samples.push_back({"rank" + std::to_string(j + 1), l, cols[j], {}});
    ranked.push_back(std::move(cols));
  }
  rep.checks.push_back(make_check("L(0) = (l) violations", static_cast<double>(bad_start), "<=", 0.0,
                                  cfg.replicates * static_cast<long>(ls.size())));

  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto ts = Clock::now();
    for (int j = 0; j < kRanks; ++j) {
      const KsTest ks = ks_permutation_test(WeightedSample(ranked[i - 1][j]), WeightedSample(ranked[i][j]),
                                            cfg.permutations, stream_seed(cfg.seed, kPermutation, 10 * i + j));
      const std::string name = "rank " + std::to_string(j + 1) + " stabilization KS(l=" + std::to_string(ls[i - 1]) +
                               ", l=" + std::to_string(ls[i]) + ") p";
      if (j == 0)
        rep.checks.push_back(make_check(name, ks.p_value, ">", cfg.tolerances.ks_p, cfg.replicates, seconds_since(ts)));
      else
        rep.metrics[name] = ks.p_value;
    }
  }

  // Largest fragment of the growth-fragmentation with self-similarity 1 - theta.
  const auto ts = Clock::now();
  // Each peeling step removes a_q height-h edges of the tracked cycle on average, so a layer
  // of half-perimeter p costs 2p / a_q steps; with the step clock c_q this gives 2 c_q / a_q.
  const double time = 2.0 * k.c_q / k.a_q * t_eff;
  CumulantFunction kappa = stable_cumulant(theta);
  kappa.chars.alpha = 1.0 - theta;
  Truncation tr;
  tr.min_birth_size = 1e-3;
  tr.max_generation = 30;
  tr.horizon = time;
  SimulationOptions opts;
  opts.trunc_epsilon = cfg.trunc_epsilon;
  opts.dt = cfg.dt;
  const CellSystemSampler gf(kappa, tr, opts);
  std::vector<double> largest(static_cast<std::size_t>(cfg.replicates));
  const std::uint64_t seed = stream_seed(cfg.seed, kCells, 1);
  parallel_for(largest.size(), [&](std::size_t i) {
    Rng rng = stream_rng(seed, kCells, i);
    const CellSystem cs = gf.sample(1.0, rng);
    GFSnapshot snap = snapshot(cs, time);
    double best = 0.0;
    for (const SnapshotEntry& e : snap.entries) best = std::max(best, e.size);
    largest[i] = best;
  });
  const KsTest ks = ks_permutation_test(WeightedSample(ranked.back()[0]), WeightedSample(largest), cfg.permutations,
                                        stream_seed(cfg.seed, kPermutation, 999));
  rep.metrics["continuous"] = {{"time", time},
                               {"height_clock", 2.0 * k.c_q / k.a_q},
                               {"largest_mean", estimate_json(mean_estimate(largest))}};
  rep.checks.push_back(make_check("largest cycle vs largest fragment KS p", ks.p_value, ">",
                                  cfg.tolerances.ks_p_cross, cfg.replicates, seconds_since(ts)));
  rep.samples.push_back({"largest_fragment", 0, largest, {}});
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

Report experiment_intrinsic_area(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  Report rep;
  rep.experiment = "intrinsic_area";
  const CumulantFunction kappa = stable_cumulant(cfg.theta);
  const double wm = *kappa.omega_minus;
  const double wp = *kappa.omega_plus;
  const std::vector<double> area = intrinsic_area_law(kappa, cfg.replicates, stream_seed(cfg.seed, kCells, 0), cfg.area_floor,
                                                      cfg.trunc_epsilon, cfg.dt);
  const double sim_time = seconds_since(t0);
  const McEstimate m = mean_estimate(area);
  const double slope = survival_tail_slope(area);
  const double target = -wp / wm;
  rep.metrics["mean"] = estimate_json(m);
  rep.metrics["tail_slope"] = slope;
  rep.metrics["expected_tail_slope"] = target;
  rep.metrics["hill_tail_index_top10pct"] = hill_estimator(area, std::max<std::size_t>(2, area.size() / 10));
  rep.checks.push_back(make_check("intrinsic area mean = 1 (z)", z_score(m, 1.0), "<=", cfg.tolerances.z,
                                  cfg.replicates, sim_time));
  rep.checks.push_back(make_check("tail slope deviation |slope + omega_+/omega_-|", std::abs(slope - target), "<=",
                                  cfg.tolerances.slope, cfg.replicates, sim_time));
  const auto ts = Clock::now();
  Rng srng = stream_rng(cfg.seed, kStable, 1);
  const WeightedSample stable =
      inverse_size_biased_law(1.0 / (cfg.theta + 0.5), static_cast<std::size_t>(cfg.stable_replicates), srng);
  const KsTest ks = ks_permutation_test(WeightedSample(area), stable, cfg.permutations,
                                        stream_seed(cfg.seed, kPermutation, 0));
  rep.checks.push_back(make_check("KS(intrinsic area, stable side) p", ks.p_value, ">", cfg.tolerances.ks_p,
                                  cfg.replicates, seconds_since(ts)));
  rep.samples.push_back({"intrinsic_area", 0, area, {}});
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

std::vector<Report> run_experiment(const ExperimentConfig& cfg) {
  std::vector<Report> reports;
  if (cfg.name == "intrinsic_area") {
    reports.push_back(experiment_intrinsic_area(cfg));
  } else {
    const NuTable nu = build_nu(WeightSequence::explicit_family(cfg.theta), cfg.k_max, NuMethod::closed_form);
    if (cfg.name == "area_law") {
      reports.push_back(experiment_area_law(cfg, nu));
    } else if (cfg.name == "perimeter_scaling") {
      for (const std::string& r : cfg.regimes)
        reports.push_back(experiment_perimeter_scaling(cfg, chain_regime_from_string(r), nu));
    } else if (cfg.name == "slicing") {
      reports.push_back(experiment_slicing(cfg, nu));
    } else {
      throw SchemaError("name", "unknown experiment " + cfg.name);
    }
  }
  if (!cfg.output_path.empty()) {
    std::filesystem::create_directories(cfg.output_path);
    nlohmann::json all = nlohmann::json::array();
    bool ok = true;
    for (const Report& r : reports) {
      all.push_back(r.summary());
      ok = ok && r.pass();
    }
    const std::filesystem::path dir(cfg.output_path);
    std::ofstream(dir / (cfg.name + "_summary.json"))
        << nlohmann::json{{"experiment", cfg.name}, {"pass", ok}, {"config", to_json(cfg)}, {"metrics", {{"reports", all}}}}
               .dump(2)
        << '\n';
    std::ofstream csv(dir / (cfg.name + "_samples.csv"));
    csv << "experiment,label,l,value,weight\n";
    for (const Report& r : reports) {
      std::ostringstream os;
      write_samples_csv(os, r);
      const std::string body = os.str();
      csv << body.substr(body.find('\n') + 1);
    }
  }
  return reports;
}

}  // namespace gfpeel
