#include "gfpeel/ssmp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "gfpeel/errors.hpp"
#include "gfpeel/parallel.hpp"

namespace gfpeel {

namespace {

constexpr double kTailCut = 1e-13;

double mass_between(const LevyMeasure& dens, double lo, double hi) {
  const MeasureIntegrand one{[](double) { return 1.0; }, 0.0, 0.0, 0.0};
  return integrate_measure(dens, one, lo, hi);
}

// Edges in |y| covering [eps, bound): geometric up to 1, then widening linear cells.
std::vector<double> cell_edges(double eps, double bound) {
  std::vector<double> edges{eps};
  const double ratio = std::pow(10.0, 1.0 / 64.0);
  double y = eps;
  while (y < std::min(1.0, bound)) {
    y = std::min(y * ratio, std::min(1.0, bound));
    edges.push_back(y);
  }
  while (y < bound) {
    y = std::min(y + 0.05 * std::max(1.0, y / 10.0), bound);
    edges.push_back(y);
  }
  return edges;
}

// Smallest Y (from a geometric search) with int_{|y|>Y} e^{weight |y|} dens below
// kTailCut * reference. The weight keeps exponential moments close to the tail
// rate accurate, not just the jump rate.
double tail_bound(const LevyMeasure& dens, double start, int dir, double weight, double reference,
                  double* cut) {
  const MeasureIntegrand w{[weight](double y) { return std::exp(weight * std::abs(y)); }, 0.0,
                           dir > 0 ? weight : 0.0, dir < 0 ? weight : 0.0};
  double y = std::max(start, 2.0);
  for (int it = 0; it < 200; ++it) {
    const double tail =
        dir > 0 ? integrate_measure(dens, w, y, kInf) : integrate_measure(dens, w, -kInf, -y);
    if (tail <= kTailCut * reference) {
      *cut += dir > 0 ? mass_between(dens, y, kInf) : mass_between(dens, -kInf, -y);
      return y;
    }
    y *= 1.25;
  }
  throw DomainError("LevySampler: Lévy measure tail too heavy to tabulate");
}

double segment_clock(double xi0, double xi1, double h, double alpha) {
  if (alpha == 0.0) return h;
  const double d = -alpha * (xi1 - xi0);
  const double factor = std::abs(d) < 1e-12 ? 1.0 : std::expm1(d) / d;
  return h * std::exp(-alpha * xi0) * factor;
}

}  // namespace

LevySampler::LevySampler(const LevyCharacteristics& chars, double trunc_epsilon)
    : eps_(trunc_epsilon), killing_(chars.killing) {
  if (!(eps_ > 0.0)) throw DomainError("LevySampler: trunc_epsilon must be positive");
  measure_ = chars.measure;
  LevyMeasure dens = chars.measure;
  dens.atoms.clear();

  const bool exponential = chars.compensation == Compensation::exponential;
  const MeasureIntegrand square{[](double) { return 1.0; }, 2.0, 0.0, 0.0};
  const double small_var = integrate_measure(dens, square, -eps_, eps_);
  // int_{|y|<eps} (e^y - 1 - c(y)) dLambda; zero for the exponential compensator.
  double small_comp = 0.0;
  if (!exponential) {
    const MeasureIntegrand g{[](double y) {
                               return compensator_reduced(Compensation::truncated, 1.0, y);
                             },
                             2.0, 1.0, 0.0};
    small_comp = integrate_measure(dens, g, -eps_, eps_);
  }
  // int_{|y|>=eps} c(y) dLambda, atoms included.
  double big_comp = 0.0;
  if (exponential) {
    const MeasureIntegrand g{[](double y) { return std::expm1(y); }, 0.0, 1.0, 0.0};
    big_comp = integrate_measure(dens, g, -kInf, -eps_) + integrate_measure(dens, g, eps_, kInf);
    for (const Atom& a : chars.measure.atoms) big_comp += a.mass * std::expm1(a.position);
  } else {
    const MeasureIntegrand g{[](double y) { return y; }, 0.0, 0.0, 0.0};
    big_comp = integrate_measure(dens, g, -1.0, -eps_) + integrate_measure(dens, g, eps_, 1.0);
    for (const Atom& a : chars.measure.atoms)
      if (std::abs(a.position) < 1.0) big_comp += a.mass * a.position;
  }
  if (!std::isfinite(small_var) || !std::isfinite(big_comp) || !std::isfinite(small_comp))
    throw DomainError("LevySampler: Lévy measure integrals diverge");
  variance_ = chars.sigma2 + small_var;
  // Matches the simulated exponent to Psi at q = 1.
  drift_ = chars.b - big_comp + small_comp - 0.5 * small_var;

  std::vector<double> masses;
  for (const Atom& a : chars.measure.atoms) {
    if (a.mass <= 0.0) continue;
    cells_.push_back({a.position, a.position, 0.0});
    masses.push_back(a.mass);
  }
  if (dens.has_density()) {
    const double reference =
        std::max(1e-12, mass_between(dens, -1.0, -eps_) + mass_between(dens, eps_, 1.0));
    for (int dir : {-1, 1}) {
      const double bound_raw = dir < 0 ? -dens.lower : dens.upper;
      if (!(bound_raw > eps_)) continue;
      double bound = bound_raw;
      if (std::isinf(bound)) {
        const double rate = dir > 0 ? dens.upper_tail_rate : dens.lower_tail_rate;
        const double weight = std::isfinite(rate) ? std::max(0.0, rate - 0.5) : 0.0;
        bound = tail_bound(dens, 1.0, dir, weight, reference, &tail_cut_);
      }
      const std::vector<double> edges = cell_edges(eps_, bound);
      for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double lo = dir > 0 ? edges[i] : -edges[i + 1];
        const double hi = dir > 0 ? edges[i + 1] : -edges[i];
        const double m = mass_between(dens, lo, hi);
        if (!(m > 0.0)) continue;
        double env = 0.0;
        for (int k = 0; k <= 16; ++k) {
          const double y = lo + (hi - lo) * (k == 0 ? 1e-9 : k == 16 ? 1.0 - 1e-9 : k / 16.0);
          env = std::max(env, dens.density(y));
        }
        cells_.push_back({lo, hi, 1.1 * env});
        masses.push_back(m);
      }
    }
  }
  NeumaierSum total;
  for (double m : masses) total.add(m);
  rate_ = total.value();
  if (rate_ > 0.0) {
    tail_cut_ /= rate_;
    NeumaierSum run;
    cdf_.reserve(masses.size());
    for (double m : masses) {
      run.add(m);
      cdf_.push_back(run.value() / rate_);
    }
    cdf_.back() = 1.0;
  }
}

double LevySampler::sample_jump(Rng& rng) const {
  if (cells_.empty()) throw ConsistencyError("LevySampler: no jumps to sample");
  const double u = uniform_open(rng);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const Cell& c = cells_[std::min<std::size_t>(it - cdf_.begin(), cells_.size() - 1)];
  if (c.lo == c.hi) return c.lo;
  for (;;) {
    const double y = c.lo + (c.hi - c.lo) * uniform_open(rng);
    if (uniform_open(rng) * c.envelope <= measure_.density(y)) return y;
  }
}

LevyPath sample_levy_path(const LevySampler& sampler, const PathControl& control, Rng& rng) {
  if (!(control.horizon > 0.0) || !(control.dt > 0.0))
    throw DomainError("sample_levy_path: horizon and dt must be positive");
  if (sampler.jump_rate() * control.horizon > 1e9)
    throw ResourceError("sample_levy_path: expected jump count exceeds 1e9");
  std::exponential_distribution<double> unit_exp(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  LevyPath path;
  path.trunc_epsilon = sampler.trunc_epsilon();
  path.grid_times.push_back(0.0);
  path.values.push_back(0.0);

  const double rate = sampler.jump_rate();
  const double kill_time = sampler.killing() > 0.0 ? unit_exp(rng) / sampler.killing() : kInf;
  double next_jump = rate > 0.0 ? unit_exp(rng) / rate : kInf;
  const double sd = std::sqrt(sampler.variance());
  const double clock_scale = std::pow(control.clock_x0, -control.clock_alpha);
  const bool track_clock = std::isfinite(control.clock_max);
  double clock = 0.0;
  double r = 0.0;
  double xi = 0.0;
  long n_jumps = 0;

  for (;;) {
    const double next_grid = std::min(r + control.dt, control.horizon);
    const double t_next = std::min({next_grid, next_jump, kill_time});
    const double h = t_next - r;
    double xi_new = xi + sampler.drift() * h;
    if (sd > 0.0) xi_new += sd * std::sqrt(h) * normal(rng);
    if (track_clock) clock += clock_scale * segment_clock(xi, xi_new, h, control.clock_alpha);
    r = t_next;
    xi = xi_new;
    if (r == kill_time) {
      path.killed_at = r;
      path.grid_times.push_back(r);
      path.values.push_back(xi);
      path.end = PathEnd::killed;
      break;
    }
    if (r == next_jump) {
      const double j = sampler.sample_jump(rng);
      xi += j;
      path.jumps.push_back({r, j});
      next_jump = r + unit_exp(rng) / rate;
      if (++n_jumps > control.max_jumps)
        throw ResourceError("sample_levy_path: jump budget exhausted");
    }
    path.grid_times.push_back(r);
    path.values.push_back(xi);
    if (xi < control.xi_floor) {
      path.end = PathEnd::floor;
      break;
    }
    if (xi > control.xi_ceiling) {
      path.end = PathEnd::ceiling;
      break;
    }
    if (track_clock && clock >= control.clock_max) {
      path.end = PathEnd::clock;
      break;
    }
    if (r >= control.horizon) {
      path.end = PathEnd::horizon;
      break;
    }
  }
  path.horizon = r;
  return path;
}

LevyPath sample_levy_path(const LevyCharacteristics& chars, double horizon, double trunc_epsilon,
                          double dt, Rng& rng) {
  const LevySampler sampler(chars, trunc_epsilon);
  PathControl control;
  control.horizon = horizon;
  control.dt = dt;
  return sample_levy_path(sampler, control, rng);
}

PssmpPath lamperti_transform(const LevyPath& path, double x0, double alpha) {
  if (!(x0 > 0.0)) throw DomainError("lamperti_transform: x0 must be positive");
  PssmpPath out;
  out.start = x0;
  out.alpha = alpha;
  out.end = path.end;
  const std::size_t n = path.grid_times.size();
  out.times.reserve(n);
  out.values.reserve(n);
  out.left_values.reserve(n);
  const double scale = std::pow(x0, -alpha);
  double t = 0.0;
  std::size_t j = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = path.values[i];
    double left = xi;
    if (j < path.jumps.size() && path.jumps[j].time == path.grid_times[i]) {
      left = xi - path.jumps[j].size;
      ++j;
    }
    if (i > 0) t += scale * segment_clock(prev, left, path.grid_times[i] - path.grid_times[i - 1], alpha);
    const double x_left = x0 * std::exp(left);
    const double x_right = x0 * std::exp(xi);
    out.times.push_back(t);
    out.values.push_back(x_right);
    out.left_values.push_back(x_left);
    if (x_right < x_left) out.neg_jumps.push_back({t, x_left - x_right});
    prev = xi;
  }
  if (path.killed_at) {
    out.lifetime = t;
    out.censored = false;
    out.values.back() = 0.0;
  } else {
    out.lifetime = kInf;
    out.censored = true;
  }
  return out;
}

std::optional<double> PssmpPath::value_at(double t) const {
  if (t < 0.0 || times.empty()) throw DomainError("PssmpPath::value_at: t must be >= 0");
  if (!censored && t >= lifetime) return 0.0;
  if (t > times.back()) return std::nullopt;
  if (t == times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double a = values[k];
  const double b = left_values[k + 1];
  const double span = times[k + 1] - times[k];
  if (!(span > 0.0)) return a;
  const double u = (t - times[k]) / span;
  const double delta = std::log(b / a);
  const double d = -alpha * delta;
  const double s = std::abs(d) < 1e-12 ? u : std::log1p(u * std::expm1(d)) / d;
  return a * std::exp(delta * s);
}

std::vector<Jump> negative_jumps(const PssmpPath& path) { return path.neg_jumps; }

McEstimate mellin_check(const LevyCharacteristics& chars, double q, double x, long n_rep,
                        std::uint64_t seed, double trunc_epsilon, double dt) {
  const double psi = psi_eval(chars, q);
  if (!(psi < 0.0)) throw DomainError("mellin_check: requires Psi(q) < 0");
  if (n_rep < 2) throw DomainError("mellin_check: need at least two replicates");
  const LevySampler sampler(chars, trunc_epsilon);
  const double gq = sampler.gaussian_exponent(q);
  const double stop_level = std::log(1e-8);
  const double time_cap = 1e4;
  std::vector<double> samples(static_cast<std::size_t>(n_rep));

  parallel_for(samples.size(), [&](std::size_t i) {
    Rng rng = replicate_rng(seed, i);
    std::exponential_distribution<double> unit_exp(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double rate = sampler.jump_rate();
    const double kill_time = sampler.killing() > 0.0 ? unit_exp(rng) / sampler.killing() : kInf;
    double next_jump = rate > 0.0 ? unit_exp(rng) / rate : kInf;
    const double sd = std::sqrt(sampler.variance());
    double r = 0.0;
    double xi = 0.0;
    NeumaierSum integral;
    for (;;) {
      const double t_next = std::min({r + dt, next_jump, kill_time});
      const double h = t_next - r;
      // E[int_r^{r+h} e^{q xi}] given xi(r), for the Gaussian part
      const double gh = gq * h;
      integral.add(std::exp(q * xi) * (std::abs(gh) < 1e-12 ? h : std::expm1(gh) / gq));
      xi += sampler.drift() * h;
      if (sd > 0.0) xi += sd * std::sqrt(h) * normal(rng);
      r = t_next;
      if (r == kill_time) break;
      if (r == next_jump) {
        xi += sampler.sample_jump(rng);
        next_jump = r + unit_exp(rng) / rate;
      }
      if (q * xi < stop_level || r >= time_cap) {
        integral.add(std::exp(q * xi) / -psi);
        break;
      }
    }
    samples[i] = std::pow(x, q) * integral.value();
  });

  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (samples[i] - mean);
  }
  const double var = m2 / static_cast<double>(samples.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples.size())), n_rep};
}

void write_path_csv(std::ostream& os, const PssmpPath& path) {
  os << "t,X_t,is_jump,jump_size\n";
  os.precision(17);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    const double jump = path.values[i] - path.left_values[i];
    const bool is_jump = i > 0 && jump != 0.0 && !(path.end == PathEnd::killed && i + 1 == path.times.size());
    os << path.times[i] << ',' << path.values[i] << ',' << (is_jump ? 1 : 0) << ','
       << (is_jump ? jump : 0.0) << '\n';
  }
}

}  // namespace gfpeel
