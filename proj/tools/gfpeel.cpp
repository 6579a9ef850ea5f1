#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gfpeel/errors.hpp"
#include "gfpeel/experiments.hpp"
#include "gfpeel/growth_frag.hpp"
#include "gfpeel/levy.hpp"
#include "gfpeel/parallel.hpp"
#include "gfpeel/peeling.hpp"
#include "gfpeel/random.hpp"
#include "gfpeel/ssmp.hpp"
#include "gfpeel/suites.hpp"

namespace fs = std::filesystem;
using namespace gfpeel;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
  std::ostringstream os;
  os << stem << '_' << i << ext;
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ResourceError("cannot open " + p.string() + " for writing");
  os.precision(17);
  return os;
}

void print_checks(const std::vector<Check>& checks) {
  for (const Check& c : checks) std::cout << c.line() << '\n';
}

NuTable make_nu(double theta, long k_max, const std::string& method) {
  return build_nu(WeightSequence::explicit_family(theta), k_max, nu_method_from_string(method));
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  double theta = 1.25;
  bool combinatorial = false;
};

int run_verify(const VerifyArgs& a) {
  std::vector<Check> checks;
  SuiteResult exact = suite_exact_identities();
  checks = exact.checks;

  const CumulantFunction k = stable_cumulant(a.theta);
  const RootPair roots = find_roots(k, {k.domain.lo + 1e-9, k.domain.hi - 1e-9});
  const double dm = roots.omega_minus ? std::abs(*roots.omega_minus - (a.theta + 0.5)) : kInf;
  const double dp = roots.omega_plus ? std::abs(*roots.omega_plus - (a.theta + 1.5)) : kInf;
  std::ostringstream name;
  name << "roots at theta = " << a.theta;
  checks.push_back(make_check(name.str(), std::max(dm, dp), "<=", 1e-10, 2));

  bool ok = exact.pass() && checks.back().pass;
  if (a.combinatorial) {
    const SuiteResult comb = suite_combinatorial(a.theta);
    checks.insert(checks.end(), comb.checks.begin(), comb.checks.end());
    ok = ok && comb.pass();
  }
  print_checks(checks);
  std::cout << (ok ? "PASS" : "FAIL") << " verify\n";
  return ok ? 0 : kExitFail;
}

// ---------------------------------------------------------------------------

struct GfArgs {
  double theta = 1.25;
  double alpha = 0.0;
  double x0 = 1.0;
  std::uint64_t seed = 0;
  long replicates = 1;
  double min_birth = 1e-3;
  int max_generation = 30;
  double horizon = kInf;
  std::optional<double> time;
  double eps = 1e-2;
  double dt = 1e-2;
  std::string out = "gf_out";
};

int run_simulate_gf(const GfArgs& a) {
  CumulantFunction kappa = stable_cumulant(a.theta);
  kappa.chars.alpha = a.alpha;
  Truncation tr;
  tr.min_birth_size = a.min_birth;
  tr.max_generation = a.max_generation;
  tr.horizon = a.horizon;
  SimulationOptions opts;
  opts.trunc_epsilon = a.eps;
  opts.dt = a.dt;
  const CellSystemSampler gf(kappa, tr, opts);
  fs::create_directories(a.out);
  parallel_for(static_cast<std::size_t>(a.replicates), [&](std::size_t i) {
    Rng rng = replicate_rng(a.seed, i);
    const CellSystem cs = gf.sample(a.x0, rng);
    std::ofstream sys = open_out(fs::path(a.out) / indexed("system", i, ".ndjson"));
    write_system_ndjson(sys, cs);
    if (a.time) {
      GFSnapshot snap = snapshot(cs, *a.time);
      snap.sort_descending();
      std::ofstream csv = open_out(fs::path(a.out) / indexed("snapshot", i, ".csv"));
      write_snapshot_csv(csv, snap);
    }
  });
  std::cout << "wrote " << a.replicates << " cell systems to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct PssmpArgs {
  double theta = 1.25;
  double alpha = 0.0;
  double x0 = 1.0;
  std::string tilt = "none";
  std::uint64_t seed = 0;
  long replicates = 1;
  double horizon = 10.0;
  double time = kInf;
  double eps = 1e-2;
  double dt = 1e-2;
  std::string out = "pssmp_out";
};

int run_simulate_pssmp(const PssmpArgs& a) {
  const CumulantFunction kappa = stable_cumulant(a.theta);
  LevyCharacteristics chars = kappa.chars;
  if (a.tilt == "plus")
    chars = shift_exponent(kappa, *kappa.omega_plus);
  else if (a.tilt == "minus")
    chars = shift_exponent(kappa, *kappa.omega_minus);
  const LevySampler sampler(chars, a.eps);
  fs::create_directories(a.out);
  parallel_for(static_cast<std::size_t>(a.replicates), [&](std::size_t i) {
    Rng rng = replicate_rng(a.seed, i);
    PathControl control;
    control.horizon = a.horizon;
    control.dt = a.dt;
    control.clock_x0 = a.x0;
    control.clock_alpha = a.alpha;
    control.clock_max = a.time;
    const PssmpPath y = lamperti_transform(sample_levy_path(sampler, control, rng), a.x0, a.alpha);
    std::ofstream csv = open_out(fs::path(a.out) / indexed("path", i, ".csv"));
    write_path_csv(csv, y);
  });
  std::cout << "wrote " << a.replicates << " paths to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct PeelArgs {
  double theta = 1.25;
  long perimeter = 1;
  std::string law = "free";
  std::uint64_t seed = 0;
  long replicates = 1;
  long k_max = 100000;
  long budget = 100000000;
  std::string nu_method = "closed_form";
  std::string out = "peel_out";
};

int run_peel(const PeelArgs& a) {
  const NuTable nu = make_nu(a.theta, a.k_max, a.nu_method);
  const PeelKernel kernel(nu);
  const PeelLaw law = peel_law_from_string(a.law);
  fs::create_directories(a.out);
  std::vector<PeelOutcome> outcomes(static_cast<std::size_t>(a.replicates));
  parallel_for(outcomes.size(), [&](std::size_t i) {
    Rng rng = replicate_rng(a.seed, i);
    std::ofstream log = open_out(fs::path(a.out) / indexed("peel", i, ".ndjson"));
    if (law == PeelLaw::free) {
      outcomes[i] = peel_until_done(a.perimeter, kernel, rng, a.budget, &log);
      return;
    }
    // Doob laws never close; peel the distinguished hole until the budget runs out.
    ExploredMap map(a.perimeter, law);
    for (long s = 0; s < a.budget && map.open_holes() > 0; ++s) {
      int h = map.distinguished().value_or(-1);
      if (h < 0)
        for (int j = 0; j < static_cast<int>(map.holes().size()); ++j)
          if (map.holes()[j].open) {
            h = j;
            break;
          }
      const PeelEvent e = peel_step(map, h, kernel, rng);
      write_event_ndjson(log, s, e, map);
    }
    outcomes[i].vertices = map.vertices();
    outcomes[i].edges = map.edges();
    outcomes[i].faces = map.faces() - 1;
    outcomes[i].steps = map.steps();
    outcomes[i].censored = map.open_holes() > 0;
  });
  long censored = 0;
  for (const PeelOutcome& o : outcomes) censored += o.censored;
  std::cout << "wrote " << a.replicates << " event logs to " << a.out << " (" << censored << " censored)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SliceArgs {
  double theta = 1.25;
  long perimeter = 50;
  std::uint64_t seed = 0;
  long replicates = 1;
  int r_max = 10;
  long k_max = 100000;
  long budget = 100000000;
  std::string out = "slice_out";
};

int run_slice(const SliceArgs& a) {
  const NuTable nu = make_nu(a.theta, a.k_max, "closed_form");
  const PeelKernel kernel(nu);
  fs::create_directories(a.out);
  long truncated = 0;
  std::vector<char> trunc(static_cast<std::size_t>(a.replicates), 0);
  parallel_for(trunc.size(), [&](std::size_t i) {
    Rng rng = replicate_rng(a.seed, i);
    const LayerRun run = layer_peel(a.perimeter, PeelLaw::free, kernel, rng, a.r_max, a.budget);
    trunc[i] = run.truncated;
    std::ofstream csv = open_out(fs::path(a.out) / indexed("layers", i, ".csv"));
    write_layers_csv(csv, run);
  });
  for (char t : trunc) truncated += t;
  std::cout << "wrote " << a.replicates << " layer files to " << a.out << " (" << truncated << " truncated)\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_experiment_file(const std::string& path, const std::optional<std::string>& output) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read " << path << '\n';
    return kExitUsage;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << path << " is not valid JSON: " << e.what() << '\n';
    return kExitUsage;
  }
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(j);
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (output) cfg.output_path = *output;
  bool ok = true;
  for (const Report& r : run_experiment(cfg)) {
    std::cout << "== " << r.experiment << '\n';
    print_checks(r.checks);
    for (const std::string& w : r.warnings) std::cout << "WARNING " << w << '\n';
    ok = ok && r.pass();
  }
  std::cout << (ok ? "PASS" : "FAIL") << " experiment " << cfg.name << '\n';
  return ok ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth-fragmentations, stable cumulants and peeling of Boltzmann maps"};
  app.require_subcommand(1);

  VerifyArgs va;
  CLI::App* verify = app.add_subcommand("verify", "Exact-identity suites");
  verify->add_option("--theta", va.theta, "theta for the root check")->check(CLI::Range(0.5, 1.5));
  verify->add_flag("--combinatorial", va.combinatorial, "also run the step-law and peeling gates");

  GfArgs ga;
  CLI::App* gf = app.add_subcommand("simulate-gf", "Cell systems of the stable-family growth-fragmentation");
  gf->add_option("--theta", ga.theta)->check(CLI::Range(0.5, 1.5));
  gf->add_option("--alpha", ga.alpha);
  gf->add_option("--x0", ga.x0)->check(CLI::PositiveNumber);
  gf->add_option("--seed", ga.seed)->required();
  gf->add_option("--replicates", ga.replicates)->check(CLI::PositiveNumber);
  gf->add_option("--min-birth", ga.min_birth)->check(CLI::PositiveNumber);
  gf->add_option("--max-generation", ga.max_generation)->check(CLI::NonNegativeNumber);
  gf->add_option("--horizon", ga.horizon)->check(CLI::PositiveNumber);
  gf->add_option("--time", ga.time, "also write the snapshot at this time");
  gf->add_option("--eps", ga.eps)->check(CLI::PositiveNumber);
  gf->add_option("--dt", ga.dt)->check(CLI::PositiveNumber);
  gf->add_option("--out", ga.out);

  PssmpArgs pa;
  CLI::App* ps = app.add_subcommand("simulate-pssmp", "Lamperti paths for the stable-family exponent");
  ps->add_option("--theta", pa.theta)->check(CLI::Range(0.5, 1.5));
  ps->add_option("--alpha", pa.alpha);
  ps->add_option("--x0", pa.x0)->check(CLI::PositiveNumber);
  ps->add_option("--tilt", pa.tilt, "none, plus (Y+) or minus (Y-)")->check(CLI::IsMember({"none", "plus", "minus"}));
  ps->add_option("--seed", pa.seed)->required();
  ps->add_option("--replicates", pa.replicates)->check(CLI::PositiveNumber);
  ps->add_option("--horizon", pa.horizon, "Levy time horizon")->check(CLI::PositiveNumber);
  ps->add_option("--time", pa.time, "real-time cap")->check(CLI::PositiveNumber);
  ps->add_option("--eps", pa.eps)->check(CLI::PositiveNumber);
  ps->add_option("--dt", pa.dt)->check(CLI::PositiveNumber);
  ps->add_option("--out", pa.out);

  PeelArgs pe;
  CLI::App* peel = app.add_subcommand("peel", "Peeling explorations, one NDJSON event log per replicate");
  peel->add_option("--theta", pe.theta)->check(CLI::Range(0.5, 1.5));
  peel->add_option("--perimeter", pe.perimeter, "half-perimeter l")->check(CLI::PositiveNumber);
  peel->add_option("--law", pe.law)->check(CLI::IsMember({"free", "pointed", "infinite"}));
  peel->add_option("--seed", pe.seed)->required();
  peel->add_option("--replicates", pe.replicates)->check(CLI::PositiveNumber);
  peel->add_option("--kmax", pe.k_max)->check(CLI::Range(16L, 100000000L));
  peel->add_option("--budget", pe.budget)->check(CLI::PositiveNumber);
  peel->add_option("--nu-method", pe.nu_method)->check(CLI::IsMember({"harmonicity", "tutte", "closed_form"}));
  peel->add_option("--out", pe.out);

  SliceArgs sa;
  CLI::App* slice = app.add_subcommand("slice", "Peeling by layers, ranked cycle half-perimeters per height");
  slice->add_option("--theta", sa.theta)->check(CLI::Range(0.5, 1.5));
  slice->add_option("--perimeter", sa.perimeter)->check(CLI::PositiveNumber);
  slice->add_option("--seed", sa.seed)->required();
  slice->add_option("--replicates", sa.replicates)->check(CLI::PositiveNumber);
  slice->add_option("--rmax", sa.r_max)->check(CLI::NonNegativeNumber);
  slice->add_option("--kmax", sa.k_max)->check(CLI::Range(16L, 100000000L));
  slice->add_option("--budget", sa.budget)->check(CLI::PositiveNumber);
  slice->add_option("--out", sa.out);

  std::string config_path;
  std::optional<std::string> output;
  CLI::App* exp = app.add_subcommand("experiment", "Run an experiment from a JSON config");
  exp->add_option("config", config_path, "config file")->required();
  exp->add_option("--output", output, "override output_path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*verify) return run_verify(va);
    if (*gf) return run_simulate_gf(ga);
    if (*ps) return run_simulate_pssmp(pa);
    if (*peel) return run_peel(pe);
    if (*slice) return run_slice(sa);
    if (*exp) return run_experiment_file(config_path, output);
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
