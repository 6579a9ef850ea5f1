#include "gfpeel/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "gfpeel/errors.hpp"
#include "gfpeel/growth_frag.hpp"
#include "gfpeel/levy.hpp"
#include "gfpeel/numerics.hpp"
#include "gfpeel/parallel.hpp"
#include "gfpeel/random.hpp"

namespace gfpeel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double z_of(const McEstimate& e, double target) {
  if (!(e.se > 0.0)) return e.mean == target ? 0.0 : kInf;
  return std::abs(e.mean - target) / e.se;
}

// The twenty theta values of the root suite, spread over (0.6, 1.5].
std::vector<double> root_thetas() {
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(0.6 + 0.9 * i / 20.0);
  return out;
}

void finish(SuiteResult& r, Clock::time_point t0, double limit) {
  r.wall_seconds = seconds_since(t0);
  r.checks.push_back(make_check(r.name + " runtime (s)", r.wall_seconds, "<", limit, 0, r.wall_seconds));
}

}  // namespace

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const Check& c : checks) cs.push_back(c.to_json());
  return {{"experiment", name}, {"pass", pass()}, {"metrics", {{"checks", cs}, {"wall_seconds", wall_seconds}}}};
}

// ---------------------------------------------------------------------------

SuiteResult suite_exact_identities() {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "exact identities";

  auto ts = Clock::now();
  double closed = 0.0, found = 0.0;
  for (double theta : root_thetas()) {
    closed = std::max({closed, std::abs(kappa_theta(theta, theta + 0.5)), std::abs(kappa_theta(theta, theta + 1.5))});
    const CumulantFunction k = stable_cumulant(theta);
    const RootPair roots = find_roots(k, {k.domain.lo + 1e-9, k.domain.hi - 1e-9});
    if (!roots.omega_minus || !roots.omega_plus) {
      found = kInf;
      continue;
    }
    found = std::max({found, std::abs(*roots.omega_minus - (theta + 0.5)), std::abs(*roots.omega_plus - (theta + 1.5))});
  }
  r.checks.push_back(make_check("kappa_theta at theta+1/2 and theta+3/2, 20 theta", closed, "<=", 1e-10, 20,
                                seconds_since(ts)));
  r.checks.push_back(make_check("located roots vs theta+1/2, theta+3/2, 20 theta", found, "<=", 1e-10, 20,
                                seconds_since(ts)));

  ts = Clock::now();
  double quotient = 0.0;
  long points = 0;
  for (double theta : root_thetas()) {
    const double lo = theta + 0.01, hi = 2.0 * theta + 0.99;
    for (int i = 0; i <= 200; ++i) {
      const double q = lo + (hi - lo) * i / 200.0;
      if (std::abs(q - 2.0 * theta) < 0.01) continue;
      const double a = kappa_theta(theta, q), b = kappa_theta_quotient(theta, q);
      quotient = std::max(quotient, std::abs(a - b) / std::max(std::abs(a), 1.0));
      ++points;
    }
  }
  r.checks.push_back(make_check("quotient vs reflection form", quotient, "<=", 1e-10, points, seconds_since(ts)));

  ts = Clock::now();
  double three_halves = 0.0;
  for (double q : {2.0, 2.5, 3.2, 4.0}) {
    const IdentitySides s = three_halves_identity(q);
    three_halves = std::max(three_halves, std::abs(s.lhs - s.rhs) / std::max(std::abs(s.lhs), 1.0));
  }
  r.checks.push_back(make_check("theta = 3/2 integral identity, 4 q (relative)", three_halves, "<=", 1e-6, 4,
                                seconds_since(ts)));

  ts = Clock::now();
  double killing = 0.0;
  for (double theta : {0.8, 1.0, 1.25, 1.4})
    killing = std::max(killing, std::abs(killing_identity(stable_family_characteristics(theta).chars)));
  r.checks.push_back(make_check("killing identity, 4 theta", killing, "<=", 1e-6, 4, seconds_since(ts)));

  ts = Clock::now();
  double hyper = 0.0;
  for (double theta : {0.8, 1.0, 1.25, 1.4}) hyper = std::max(hyper, hypergeometric_match(theta));
  r.checks.push_back(make_check("hypergeometric match, 4 theta", hyper, "<", 1e-8, 4, seconds_since(ts)));

  ts = Clock::now();
  const double beta = incomplete_beta(-1.5, 0.5, 0.5);
  r.checks.push_back(make_check("B_{1/2}(-3/2, 1/2) + 8/3", std::abs(beta + 8.0 / 3.0), "<=", 1e-9, 1,
                                seconds_since(ts)));
  finish(r, t0, 10.0);
  return r;
}

// ---------------------------------------------------------------------------

SuiteResult suite_combinatorial(double theta, long k_max) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "combinatorial gates";
  const WeightSequence ws = WeightSequence::explicit_family(theta);

  auto ts = Clock::now();
  const NuTable nu = build_nu(ws, k_max, NuMethod::harmonicity);
  const double build = seconds_since(ts);
  r.checks.push_back(make_check("|sum nu - 1|", std::abs(nu.total_mass() - 1.0), "<=", 1e-8, k_max, build));
  r.checks.push_back(make_check("|mean of nu|", std::abs(nu.mean()), "<=", 1e-6, k_max, build));
  double harm = 0.0;
  for (long l = 1; l <= 50; ++l) harm = std::max(harm, std::abs(nu.harmonicity_residual(l)));
  r.checks.push_back(make_check("h_up harmonicity residual, l <= 50", harm, "<=", 1e-8, 50, seconds_since(ts)));

  ts = Clock::now();
  const NuTable tutte = build_nu(ws, k_max, NuMethod::tutte);
  const NuTable closed = build_nu(ws, k_max, NuMethod::closed_form);
  double dt = 0.0, dc = 0.0;
  for (long k = -50; k <= 50; ++k) {
    if (nu(k) == 0.0) continue;
    dt = std::max(dt, std::abs(tutte(k) / nu(k) - 1.0));
    dc = std::max(dc, std::abs(closed(k) / nu(k) - 1.0));
  }
  r.checks.push_back(make_check("harmonicity vs Tutte nu, |k| <= 50 (relative)", dt, "<=", 1e-6, 100,
                                seconds_since(ts)));
  r.checks.push_back(make_check("harmonicity vs closed-form nu, |k| <= 50 (relative)", dc, "<=", 1e-6, 100,
                                seconds_since(ts)));

  ts = Clock::now();
  const PeelKernel kernel(nu);
  for (PeelLaw law : {PeelLaw::free, PeelLaw::pointed, PeelLaw::infinite}) {
    double dev = 0.0;
    for (long m = 1; m <= 200; ++m) dev = std::max(dev, std::abs(kernel.total_mass(law, m) - 1.0));
    r.checks.push_back(make_check("one-step peeling mass, " + to_string(law) + " law, m <= 200", dev, "<=", 1e-8,
                                  200, seconds_since(ts)));
  }

  ts = Clock::now();
  double fu = 0.0, fa = 0.0;
  for (long m = 1; m <= 100; ++m) {
    fu = std::max(fu, std::abs(kernel.expected_f_up_after(m) / f_up(nu, m) - 1.0));
    fa = std::max(fa, std::abs(kernel.expected_area_after(m) / f_down(nu, m) - 1.0));
  }
  r.checks.push_back(make_check("cycle functional invariance, m <= 100 (relative)", fu, "<=", 1e-8, 100,
                                seconds_since(ts)));
  r.checks.push_back(make_check("area functional invariance, m <= 100 (relative)", fa, "<=", 1e-8, 100,
                                seconds_since(ts)));

  ts = Clock::now();
  const long half = k_max / 2;
  const double ratio = scaled_w_partition(nu, half) / scaled_w_asymptotic(ws, half);
  r.checks.push_back(make_check("|W / asymptotic - 1| at K/2", std::abs(ratio - 1.0), "<=", 0.05, 1,
                                seconds_since(ts)));
  finish(r, t0, 60.0);
  return r;
}

// ---------------------------------------------------------------------------

SuiteResult suite_map_monte_carlo(std::uint64_t seed, long replicates) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "map Monte Carlo";
  const NuTable nu = build_nu(WeightSequence::explicit_family(1.25), 100000, NuMethod::closed_form);
  const PeelKernel kernel(nu);
  const std::size_t n = static_cast<std::size_t>(replicates);
  long euler = 0, parity = 0, censored = 0;
  for (long l : {1L, 2L, 3L}) {
    const auto ts = Clock::now();
    std::vector<double> v(n);
    std::vector<char> bad_euler(n, 0), bad_parity(n, 0), cens(n, 0);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = replicate_rng(seed, (static_cast<std::uint64_t>(l) << 40) + i);
      try {
        const PeelOutcome out = peel_until_done(l, kernel, rng, 100000000);
        v[i] = static_cast<double>(out.vertices);
        cens[i] = out.censored;
        bad_euler[i] = !out.censored && out.euler_residual != 0;
        bad_parity[i] = out.parity_violations != 0;
      } catch (const ConsistencyError&) {
        bad_euler[i] = 1;
        v[i] = std::nan("");
      }
    });
    std::vector<double> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      euler += bad_euler[i];
      parity += bad_parity[i];
      censored += cens[i];
      if (!cens[i] && std::isfinite(v[i])) kept.push_back(v[i]);
    }
    const McEstimate m = mean_estimate(kept);
    r.checks.push_back(make_check("l=" + std::to_string(l) + " mean vertices vs f_down (SE units)",
                                  z_of(m, f_down(nu, l)), "<=", 3.0, static_cast<long>(kept.size()),
                                  seconds_since(ts)));
  }
  r.checks.push_back(make_check("maps with nonzero Euler residual", static_cast<double>(euler), "<=", 0.0,
                                3 * replicates));
  r.checks.push_back(make_check("bipartite parity violations", static_cast<double>(parity), "<=", 0.0,
                                3 * replicates));
  r.checks.push_back(make_check("censored maps", static_cast<double>(censored), "<=", 0.0, 3 * replicates));
  finish(r, t0, 600.0);
  return r;
}

// ---------------------------------------------------------------------------

SuiteResult suite_martingales(std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "martingale Monte Carlo";
  const CumulantFunction kappa = stable_cumulant(1.25);  // alpha = 0
  const double wm = *kappa.omega_minus, wp = *kappa.omega_plus;

  // M+-(n), n <= 2
  {
    const auto ts = Clock::now();
    Truncation tr;
    tr.min_birth_size = 1e-2;
    tr.max_generation = 3;
    SimulationOptions opts;
    opts.trunc_epsilon = 1e-2;
    opts.dt = 1e-2;
    const CellSystemSampler gf(kappa, tr, opts);
    constexpr std::size_t n = 4000;
    std::vector<std::array<double, 6>> vals(n);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = replicate_rng(seed, (std::uint64_t{1} << 40) + i);
      const CellSystem cs = gf.sample(1.0, rng);
      for (int g = 0; g < 3; ++g) {
        vals[i][g] = genealogical_martingale(cs, g, wm).total();
        vals[i][3 + g] = genealogical_martingale(cs, g, wp).total();
      }
    });
    const double secs = seconds_since(ts);
    for (int c = 0; c < 6; ++c) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = vals[i][c];
      const std::string which = c < 3 ? "M-" : "M+";
      r.checks.push_back(make_check(which + "(" + std::to_string(c % 3) + ") mean = 1 (SE units)",
                                    z_of(mean_estimate(col), 1.0), "<=", 4.0, static_cast<long>(n), secs));
    }
  }

  // m(q) = 1 - kappa(q)/Psi(q) from the first generation of Eve-only systems
  for (double q : {2.0, 2.5}) {
    const auto ts = Clock::now();
    Truncation tr;
    tr.min_birth_size = 1e-6;
    tr.max_generation = 0;
    SimulationOptions opts;
    opts.extra_exponents = {q};
    const CellSystemSampler gf(kappa, tr, opts);
    constexpr std::size_t n = 20000;
    std::vector<double> v(n);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = replicate_rng(seed, (std::uint64_t{2} << 40) + (q == 2.0 ? 0 : n) + i);
      v[i] = genealogical_martingale(gf.sample(1.0, rng), 0, q).total();
    });
    const double target = 1.0 - kappa(q) / psi_eval(kappa.chars, q);
    r.checks.push_back(make_check("m(" + std::to_string(q).substr(0, 3) + ") = 1 - kappa/Psi (SE units)",
                                  z_of(mean_estimate(v), target), "<=", 4.0, static_cast<long>(n),
                                  seconds_since(ts)));
  }

  // X(t)^w + sum of negative jumps^w at t = 1, both roots
  {
    const auto ts = Clock::now();
    Truncation tr;
    tr.min_birth_size = 1e-6;
    tr.max_generation = 0;
    tr.horizon = 1.0;
    const CellSystemSampler gf(kappa, tr, SimulationOptions{});
    constexpr std::size_t n = 20000;
    std::vector<double> vm(n), vp(n);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = replicate_rng(seed, (std::uint64_t{3} << 40) + i);
      const CellSystem cs = gf.sample(1.0, rng);
      vm[i] = genealogical_martingale(cs, 0, wm).total();
      vp[i] = genealogical_martingale(cs, 0, wp).total();
    });
    const double secs = seconds_since(ts);
    r.checks.push_back(make_check("fixed-t martingale, omega_- (SE units)", z_of(mean_estimate(vm), 1.0), "<=", 4.0,
                                  static_cast<long>(n), secs));
    r.checks.push_back(make_check("fixed-t martingale, omega_+ (SE units)", z_of(mean_estimate(vp), 1.0), "<=", 4.0,
                                  static_cast<long>(n), secs));
  }

  // Spine: marked jumps over eta-time T are Poisson(-Psi(omega_+) T)
  {
    const auto ts = Clock::now();
    constexpr double T = 10.0;
    constexpr std::size_t n = 4000;
    std::vector<double> counts(n);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = replicate_rng(seed, (std::uint64_t{4} << 40) + i);
      const SpineSample s = sample_spine(SpineSign::plus, kappa, 1.0, T, rng);
      counts[i] = static_cast<double>(
          std::count_if(s.marked_eta_times.begin(), s.marked_eta_times.end(), [&](double x) { return x <= T; }));
    });
    const double target = -psi_eval(kappa.chars, wp) * T;
    r.checks.push_back(make_check("spine marked-jump count vs Poisson mean (SE units)",
                                  z_of(mean_estimate(counts), target), "<=", 4.0, static_cast<long>(n),
                                  seconds_since(ts)));
  }
  finish(r, t0, 600.0);
  return r;
}

// ---------------------------------------------------------------------------

SuiteResult suite_distributional(std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "distributional";
  const double theta = 1.25;
  const NuTable nu = build_nu(WeightSequence::explicit_family(theta), 100000, NuMethod::closed_form);

  ExperimentConfig cfg;
  cfg.theta = theta;
  cfg.seed = seed;
  cfg.replicates = 10000;
  cfg.stable_replicates = 100000;

  cfg.name = "area_law";
  cfg.perimeter_list = {50};
  const Report area = experiment_area_law(cfg, nu);
  r.checks.push_back(area.check("l=50 KS(map side, stable side) p"));

  cfg.name = "perimeter_scaling";
  cfg.perimeter_list = {200, 400};
  for (ChainRegime regime : {ChainRegime::infinite, ChainRegime::pointed, ChainRegime::locally_largest}) {
    const Report rep = experiment_perimeter_scaling(cfg, regime, nu);
    for (const Check& c : rep.checks) {
      Check named = c;
      named.name = to_string(regime) + ": " + c.name;
      r.checks.push_back(named);
    }
  }

  {
    const auto ts = Clock::now();
    const CumulantFunction kappa = stable_cumulant(theta);
    const double wp = *kappa.omega_plus;
    Truncation tr;
    tr.min_birth_size = 1e-2;
    tr.max_generation = 30;
    const ManyToOneResult m2o = many_to_one_check(
        kappa, [wp](double y) { return y > 1.0 ? std::pow(y, wp) : 0.0; }, 0.2, 1.0, 4000,
        seed ^ 0x6d616e79ULL, tr);
    r.checks.push_back(make_check("many-to-one |z|", std::abs(m2o.z), "<", 4.0, 4000, seconds_since(ts)));
  }

  cfg.name = "intrinsic_area";
  cfg.replicates = 10000;
  const Report tail = experiment_intrinsic_area(cfg);
  r.checks.push_back(tail.check("tail slope deviation |slope + omega_+/omega_-|"));
  finish(r, t0, 1800.0);
  return r;
}

SuiteResult run_suite(int criterion, std::uint64_t seed) {
  switch (criterion) {
    case 1:
      return suite_exact_identities();
    case 2:
      return suite_combinatorial();
    case 3:
      return suite_map_monte_carlo(seed);
    case 4:
      return suite_martingales(seed);
    case 5:
      return suite_distributional(seed);
    default:
      throw DomainError("run_suite: criterion must be 1..5");
  }
}

}  // namespace gfpeel
