#include "gfpeel/growth_frag.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gfpeel/errors.hpp"
#include "gfpeel/parallel.hpp"

namespace gfpeel {

namespace {

double small_negative_rate(const LevyMeasure& m, double eps, double w) {
  LevyMeasure dens = m;
  dens.atoms.clear();
  MeasureIntegrand g;
  g.s = w;
  g.r = [w](double y) { return std::pow(-std::expm1(y) / -y, w); };
  return integrate_measure(dens, g, -eps, 0.0);
}

// E[int_0^h e^{w xi}] for xi Brownian with the sampler's drift and variance, xi(0) = 0.
double gaussian_integral(const LevySampler& s, double w, double h) {
  const double g = s.gaussian_exponent(w);
  const double gh = g * h;
  return std::abs(gh) < 1e-12 ? h : std::expm1(gh) / g;
}

struct Welford {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

}  // namespace

UlamLabel UlamLabel::child(int k) const {
  UlamLabel out = *this;
  out.path.push_back(k);
  return out;
}

std::string UlamLabel::str() const {
  if (path.empty()) return "0";
  std::ostringstream os;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) os << '.';
    os << path[i];
  }
  return os.str();
}

int CellSystem::exponent_index(double w) const {
  for (std::size_t i = 0; i < exponents.size(); ++i)
    if (std::abs(exponents[i] - w) <= 1e-12 * std::max(1.0, std::abs(w))) return static_cast<int>(i);
  std::ostringstream os;
  os << "exponent " << w << " is not tracked by this cell system";
  throw DomainError(os.str());
}

void CellSystem::check_invariants() const {
  std::vector<int> next_rank(cells.size(), 1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    if (c.path.times.empty() || std::abs(c.path.values.front() - c.birth_size) > 1e-12 * c.birth_size)
      throw ConsistencyError("cell " + c.label.str() + ": path does not start at the birth size");
    if (c.parent < 0) {
      if (i != 0 || !c.label.path.empty()) throw ConsistencyError("only the Eve cell may lack a parent");
      continue;
    }
    if (c.parent >= static_cast<int>(i)) throw ConsistencyError("parent listed after child");
    const Cell& p = cells[c.parent];
    if (c.label != p.label.child(next_rank[c.parent]))
      throw ConsistencyError("cell " + c.label.str() + ": label out of order");
    ++next_rank[c.parent];
    const double age = c.birth_time - p.birth_time;
    const bool found = std::any_of(p.path.neg_jumps.begin(), p.path.neg_jumps.end(), [&](const Jump& j) {
      return std::abs(j.time - age) <= 1e-9 * std::max(1.0, age) &&
             std::abs(j.size - c.birth_size) <= 1e-12 * c.birth_size;
    });
    if (!found)
      throw ConsistencyError("cell " + c.label.str() + ": no matching negative jump in the parent");
  }
  // Siblings: size descending, ties by time descending.
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const Cell& a = cells[i - 1];
    const Cell& b = cells[i];
    if (a.parent == b.parent && a.parent >= 0) {
      if (b.birth_size > a.birth_size ||
          (b.birth_size == a.birth_size && b.birth_time > a.birth_time))
        throw ConsistencyError("siblings not in decreasing lexicographic order");
    }
  }
}

CellSystemSampler::CellSystemSampler(const CumulantFunction& kappa, Truncation trunc,
                                     SimulationOptions opts,
                                     std::optional<LevyCharacteristics> eve_override)
    : chars_(kappa.chars), eve_(std::move(eve_override)), trunc_(trunc), opts_(std::move(opts)) {
  if (!kappa.omega_plus)
    throw DomainError("sample_cell_system: kappa has no root omega_+ with kappa'(omega_+) > 0");
  if (!(trunc_.min_birth_size > 0.0)) throw DomainError("sample_cell_system: min_birth_size must be > 0");
  if (trunc_.max_generation < 0) throw DomainError("sample_cell_system: max_generation must be >= 0");
  omega_plus_ = *kappa.omega_plus;
  omega_minus_ = kappa.omega_minus.value_or(std::nan(""));
  if (kappa.omega_minus) exponents_.push_back(*kappa.omega_minus);
  exponents_.push_back(omega_plus_);
  for (double w : opts_.extra_exponents) exponents_.push_back(w);

  sampler_ = std::make_shared<LevySampler>(chars_, opts_.trunc_epsilon);
  eve_sampler_ = eve_ ? std::make_shared<LevySampler>(*eve_, opts_.trunc_epsilon) : sampler_;
  for (double w : exponents_) {
    small_rate_.push_back(small_negative_rate(chars_.measure, opts_.trunc_epsilon, w));
    eve_small_rate_.push_back(
        eve_ ? small_negative_rate(eve_->measure, opts_.trunc_epsilon, w) : small_rate_.back());
  }
}

CellSystem CellSystemSampler::sample(double x0, Rng& rng) const {
  if (!(x0 > 0.0)) throw DomainError("sample_cell_system: x0 must be positive");
  CellSystem cs;
  cs.truncation = trunc_;
  cs.chars = chars_;
  cs.eve_override = eve_;
  cs.exponents = exponents_;
  cs.x0 = x0;
  Cell eve;
  eve.birth_size = x0;
  cs.cells.push_back(std::move(eve));
  for (std::size_t i = 0; i < cs.cells.size(); ++i)
    grow(cs, static_cast<int>(i), i == 0 ? *eve_sampler_ : *sampler_, rng);
  return cs;
}

void CellSystemSampler::grow(CellSystem& cs, int index, const LevySampler& sampler, Rng& rng) const {
  const double x = cs.cells[index].birth_size;
  const double birth = cs.cells[index].birth_time;
  const int gen = cs.cells[index].label.generation();
  const double alpha = (index == 0 && eve_) ? eve_->alpha : chars_.alpha;
  const std::vector<double>& rates = (index == 0) ? eve_small_rate_ : small_rate_;

  PathControl control;
  control.horizon = 1e4;
  control.dt = opts_.dt;
  control.xi_floor = std::log(opts_.floor_fraction * trunc_.min_birth_size / x);
  control.clock_x0 = x;
  control.clock_alpha = alpha;
  control.clock_max = trunc_.horizon - birth;
  if (!(control.clock_max > 0.0)) control.clock_max = 0.0;
  const LevyPath lp = sample_levy_path(sampler, control, rng);
  PssmpPath path = lamperti_transform(lp, x, alpha);

  // Small-jump compensator along the knots, e^{w xi} frozen at each segment start.
  const std::size_t ne = exponents_.size();
  std::vector<double> comp(path.times.size() * ne, 0.0);
  for (std::size_t k = 1; k < path.times.size(); ++k) {
    const double h = lp.grid_times[k] - lp.grid_times[k - 1];
    const double xi0 = lp.values[k - 1];
    for (std::size_t e = 0; e < ne; ++e) {
      const double w = exponents_[e];
      comp[k * ne + e] = comp[(k - 1) * ne + e] +
                         rates[e] * std::pow(x, w) * std::exp(w * xi0) * gaussian_integral(sampler, w, h);
    }
  }

  const double end_time = birth + path.end_time();
  const double end_size = path.values.back();
  if (lp.end == PathEnd::floor)
    cs.ledger.push_back({LedgerEntry::Kind::floor_remainder, end_time, gen + 1, end_size});
  else if (lp.end != PathEnd::killed && end_size > 0.0)
    cs.ledger.push_back({LedgerEntry::Kind::horizon_remainder, end_time, gen + 1, end_size});

  std::vector<Jump> kept;
  for (const Jump& j : path.neg_jumps) {
    if (gen + 1 > trunc_.max_generation || j.size < trunc_.min_birth_size)
      cs.ledger.push_back({LedgerEntry::Kind::pruned_child, birth + j.time, gen + 1, j.size});
    else
      kept.push_back(j);
  }
  std::sort(kept.begin(), kept.end(), [](const Jump& a, const Jump& b) {
    return a.size != b.size ? a.size > b.size : a.time > b.time;
  });

  const UlamLabel label = cs.cells[index].label;
  cs.cells[index].path = std::move(path);
  cs.cells[index].compensator = std::move(comp);
  int rank = 1;
  for (const Jump& j : kept) {
    Cell child;
    child.label = label.child(rank++);
    child.parent = index;
    child.birth_time = birth + j.time;
    child.birth_size = j.size;
    cs.cells.push_back(std::move(child));
  }
}

CellSystem sample_cell_system(const CumulantFunction& kappa, double x0, const Truncation& trunc,
                              Rng& rng, const SimulationOptions& opts) {
  return CellSystemSampler(kappa, trunc, opts).sample(x0, rng);
}

void GFSnapshot::sort_descending() {
  std::sort(entries.begin(), entries.end(),
            [](const SnapshotEntry& a, const SnapshotEntry& b) { return a.size > b.size; });
}

GFSnapshot snapshot(const CellSystem& cs, double t) {
  if (t > cs.truncation.horizon) throw DomainError("snapshot: t exceeds the truncation horizon");
  GFSnapshot snap;
  snap.time = t;
  snap.exponents = cs.exponents;
  const std::size_t ne = cs.exponents.size();
  std::vector<NeumaierSum> ledger(ne);
  for (const Cell& c : cs.cells) {
    if (c.birth_time > t) continue;
    const double age = t - c.birth_time;
    const std::optional<double> v = c.path.value_at(age);
    if (v && *v > 0.0) snap.entries.push_back({*v, c.label.generation()});
    // compensator up to min(age, end of path), linear between knots
    const std::vector<double>& times = c.path.times;
    if (times.size() < 2) continue;
    const auto it = std::upper_bound(times.begin(), times.end(), age);
    const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
    for (std::size_t e = 0; e < ne; ++e) {
      double val = c.compensator[k * ne + e];
      if (k + 1 < times.size() && times[k + 1] > times[k]) {
        const double frac = (age - times[k]) / (times[k + 1] - times[k]);
        val += frac * (c.compensator[(k + 1) * ne + e] - val);
      }
      ledger[e].add(val);
    }
  }
  for (const LedgerEntry& l : cs.ledger) {
    if (l.kind == LedgerEntry::Kind::horizon_remainder || l.time > t) continue;
    for (std::size_t e = 0; e < ne; ++e) ledger[e].add(std::pow(l.size, cs.exponents[e]));
  }
  for (std::size_t e = 0; e < ne; ++e) snap.ledger.push_back(ledger[e].value());
  if (!snap.ledger.empty()) {
    const auto min_it = std::min_element(cs.exponents.begin(), cs.exponents.end());
    snap.truncated_mass_bound = snap.ledger[static_cast<std::size_t>(min_it - cs.exponents.begin())];
  }
  return snap;
}

MartingaleValue genealogical_martingale(const CellSystem& cs, int n, double omega) {
  if (n < 0) throw DomainError("genealogical_martingale: n must be >= 0");
  if (n > cs.truncation.max_generation) {
    std::ostringstream os;
    os << "genealogical_martingale: n = " << n << " exceeds the generation cap "
       << cs.truncation.max_generation;
    throw DomainError(os.str());
  }
  const int e = cs.exponent_index(omega);
  const std::size_t ne = cs.exponents.size();
  NeumaierSum retained;
  NeumaierSum ledger;
  for (const Cell& c : cs.cells) {
    const int g = c.label.generation();
    if (g == n + 1) retained.add(std::pow(c.birth_size, omega));
    if (g <= n && !c.compensator.empty()) ledger.add(c.compensator[c.compensator.size() - ne + e]);
  }
  for (const LedgerEntry& l : cs.ledger)
    if (l.generation <= n + 1) ledger.add(std::pow(l.size, omega));
  return {retained.value(), ledger.value()};
}

MartingaleValue temporal_martingale(const GFSnapshot& snap, double omega) {
  NeumaierSum retained;
  for (const SnapshotEntry& s : snap.entries) retained.add(std::pow(s.size, omega));
  double ledger = 0.0;
  for (std::size_t e = 0; e < snap.exponents.size(); ++e)
    if (std::abs(snap.exponents[e] - omega) <= 1e-12 * std::max(1.0, std::abs(omega)))
      ledger = snap.ledger[e];
  return {retained.value(), ledger};
}

MartingaleValue intrinsic_area(const CellSystem& cs) {
  if (cs.exponents.size() < 2) throw DomainError("intrinsic_area: Cramér root omega_- is missing");
  return genealogical_martingale(cs, cs.truncation.max_generation, cs.exponents.front());
}

namespace {

// Probability that a negative jump x of eta, with Levy measure e^{wx}(Lambda + tilde Lambda),
// comes from the tilde part.
double mark_probability(const LevyMeasure& base, double x) {
  if (x >= 0.0) return 0.0;
  const double y = std::log1p(-std::exp(x));
  double lam_atom = 0.0;
  double til_atom = 0.0;
  for (const Atom& a : base.atoms) {
    if (std::abs(a.position - x) <= 1e-12 * std::max(1.0, std::abs(x))) lam_atom += a.mass;
    if (a.position < 0.0 && std::abs(a.position - y) <= 1e-12 * std::max(1.0, std::abs(y)))
      til_atom += a.mass;
  }
  // the common factor e^{w x} cancels
  if (lam_atom > 0.0 || til_atom > 0.0) return til_atom / (lam_atom + til_atom);
  const double lam = base.density(x);
  const double til = std::isfinite(y) ? base.density(y) * std::exp(x) / -std::expm1(x) : 0.0;
  const double total = lam + til;
  return total > 0.0 ? til / total : 0.0;
}

}  // namespace

SpineSample sample_spine(SpineSign sign, const CumulantFunction& kappa, double x0, double eta_horizon,
                         Rng& rng, const SimulationOptions& opts) {
  const std::optional<double> root = sign == SpineSign::plus ? kappa.omega_plus : kappa.omega_minus;
  if (!root) throw DomainError("sample_spine: the required root of kappa does not exist");
  const LevyCharacteristics phi = shift_exponent(kappa, *root);
  const LevySampler sampler(phi, opts.trunc_epsilon);
  PathControl control;
  control.horizon = eta_horizon;
  control.dt = opts.dt;
  const LevyPath lp = sample_levy_path(sampler, control, rng);

  SpineSample out;
  out.eta_horizon = lp.horizon;
  out.tagged = lamperti_transform(lp, x0, kappa.chars.alpha);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t k = 0;
  for (const Jump& j : lp.jumps) {
    while (lp.grid_times[k] != j.time) ++k;
    if (j.size >= 0.0) continue;
    const double real_time = out.tagged.times[k];
    if (unif(rng) < mark_probability(kappa.chars.measure, j.size)) {
      out.marked_eta_times.push_back(j.time);
      out.marked_times.push_back(real_time);
    } else {
      out.offspring.push_back({real_time, out.tagged.left_values[k] * -std::expm1(j.size)});
    }
  }
  return out;
}

ManyToOneResult many_to_one_check(const CumulantFunction& kappa, const std::function<double(double)>& f,
                                  double t, double x0, long n_rep, std::uint64_t seed,
                                  const Truncation& trunc, const SimulationOptions& opts) {
  if (n_rep < 2) throw DomainError("many_to_one_check: need at least two replicates");
  if (!kappa.omega_plus) throw DomainError("many_to_one_check: omega_+ is missing");
  const double wp = *kappa.omega_plus;
  ManyToOneResult res;
  if (t == 0.0) {
    res.lhs = f(x0);
    res.rhs = f(x0);
    return res;
  }
  Truncation tr = trunc;
  tr.horizon = t;
  const CellSystemSampler gf(kappa, tr, opts);
  const int ep = kappa.omega_minus ? 1 : 0;  // index of omega_+ among the tracked exponents
  const std::size_t n = static_cast<std::size_t>(n_rep);
  std::vector<double> lhs(n), ledger(n), rhs(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(seed, 2 * i);
    const CellSystem cs = gf.sample(x0, rng);
    const GFSnapshot snap = snapshot(cs, t);
    NeumaierSum s;
    for (const SnapshotEntry& e : snap.entries) s.add(f(e.size));
    lhs[i] = s.value();
    ledger[i] = snap.ledger[static_cast<std::size_t>(ep)];
  });

  const LevyCharacteristics phi = shift_exponent(kappa, wp);
  const LevySampler sampler(phi, opts.trunc_epsilon);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = replicate_rng(seed, 2 * i + 1);
    PathControl control;
    control.horizon = 1e4;
    control.dt = opts.dt;
    control.clock_x0 = x0;
    control.clock_alpha = kappa.chars.alpha;
    control.clock_max = t;
    const PssmpPath y = lamperti_transform(sample_levy_path(sampler, control, rng), x0,
                                           kappa.chars.alpha);
    const std::optional<double> v = y.value_at(std::min(t, y.end_time()));
    rhs[i] = (v && *v > 0.0) ? std::pow(x0, wp) * std::pow(*v, -wp) * f(*v) : 0.0;
  });

  Welford a, b, c;
  for (std::size_t i = 0; i < n; ++i) {
    a.add(lhs[i]);
    b.add(rhs[i]);
    c.add(ledger[i]);
  }
  res.lhs = a.mean;
  res.lhs_se = a.se();
  res.rhs = b.mean;
  res.rhs_se = b.se();
  res.lhs_ledger = c.mean;
  const double pooled = std::hypot(res.lhs_se, res.rhs_se);
  res.z = pooled > 0.0 ? (res.lhs - res.rhs) / pooled : 0.0;
  return res;
}

void write_snapshot_csv(std::ostream& os, const GFSnapshot& snap) {
  os << "size,generation\n";
  os.precision(17);
  for (const SnapshotEntry& e : snap.entries) os << e.size << ',' << e.generation << '\n';
}

void write_system_ndjson(std::ostream& os, const CellSystem& cs) {
  for (const Cell& c : cs.cells) {
    nlohmann::json j;
    j["label"] = c.label.path;
    j["birth_time"] = c.birth_time;
    j["birth_size"] = c.birth_size;
    j["n_neg_jumps"] = c.path.neg_jumps.size();
    j["end_time"] = c.birth_time + c.path.end_time();
    j["end_size"] = c.path.values.empty() ? 0.0 : c.path.values.back();
    j["censored"] = c.path.censored;
    os << j.dump() << '\n';
  }
}

}  // namespace gfpeel
