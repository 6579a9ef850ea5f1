#include "gfpeel/peeling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"

namespace gfpeel {

namespace {

constexpr double kMaxPerimeter = 1e12;

// Power p with weight(j) ~ j^p for the upward jumps of each law.
double up_tail_power(PeelLaw law, double theta) {
  switch (law) {
    case PeelLaw::free: return -2.0 * theta - 2.0;
    case PeelLaw::infinite: return -theta - 0.5;
    case PeelLaw::pointed: return -theta - 1.5;
  }
  return 0.0;
}

double chain_tail_power(ChainRegime r, double theta) {
  switch (r) {
    case ChainRegime::infinite: return -theta - 0.5;
    case ChainRegime::pointed: return -theta - 1.5;
    case ChainRegime::locally_largest: return -2.0 * theta - 2.0;
  }
  return 0.0;
}

// Draws j >= lo with probability w(j) (the weights sum to 1). The support is
// searched from j = 0 upwards and from both ends of [lo, -1] inwards, in turn,
// so the cost follows the size of the jump rather than m. Beyond `direct`, the
// upward weights are treated as a pure power law with exponent `power`.
long sample_fronts(const std::function<double(long)>& w, long lo, long direct, double power, Rng& rng) {
  const double u = uniform_open(rng);
  double cum = 0.0;
  long up = 0;
  long down = -1;
  long bottom = lo;
  for (;;) {
    const bool up_open = up <= direct;
    const bool neg_open = down >= bottom;
    if (!up_open && !neg_open) break;
    if (up_open) {
      cum += w(up);
      if (u <= cum) return up;
      ++up;
    }
    if (down >= bottom) {
      cum += w(down);
      if (u <= cum) return down;
      --down;
    }
    if (bottom <= down) {
      cum += w(bottom);
      if (u <= cum) return bottom;
      ++bottom;
    }
  }
  // Pareto tail on (direct + 1/2, inf) with density ~ x^power.
  const double s = -power - 1.0;
  const double x = (static_cast<double>(direct) + 0.5) * std::pow(uniform_open(rng), -1.0 / s);
  if (!(x < kMaxPerimeter)) {
    std::ostringstream os;
    os << "perimeter jump of " << x << " exceeds the representable range";
    throw RangeError(os.str());
  }
  return static_cast<long>(std::floor(x + 0.5));
}

long direct_range(long m) { return std::max(4096L, 32 * m); }

// Real-argument nu beyond the table (tail quadrature only).
double nu_beyond(const NuTable& nu, double x) { return nu.tail(x); }

QuadratureSpec tail_spec() {
  QuadratureSpec spec;
  spec.abs_tol = 1e-300;
  spec.rel_tol = 1e-10;
  return spec;
}

// Sum_{j >= lo} w(j), direct up to the table end and Euler-Maclaurin beyond.
double sum_with_tail(const std::function<double(long)>& w, const std::function<double(double)>& w_real,
                     long lo, long k_max, double power) {
  NeumaierSum s;
  for (long j = lo; j <= k_max; ++j) s.add(w(j));
  s.add(tail_sum(w_real, k_max + 1, k_max + 1, power, tail_spec()));
  return s.value();
}

}  // namespace

std::string to_string(ChainRegime r) {
  switch (r) {
    case ChainRegime::infinite: return "infinite";
    case ChainRegime::pointed: return "pointed";
    case ChainRegime::locally_largest: return "locally_largest";
  }
  return "?";
}

ChainRegime chain_regime_from_string(const std::string& s) {
  if (s == "infinite") return ChainRegime::infinite;
  if (s == "pointed") return ChainRegime::pointed;
  if (s == "locally_largest") return ChainRegime::locally_largest;
  throw DomainError("unknown chain regime '" + s + "'");
}

std::string to_string(PeelLaw law) {
  switch (law) {
    case PeelLaw::free: return "free";
    case PeelLaw::pointed: return "pointed";
    case PeelLaw::infinite: return "infinite";
  }
  return "?";
}

PeelLaw peel_law_from_string(const std::string& s) {
  if (s == "free") return PeelLaw::free;
  if (s == "pointed") return PeelLaw::pointed;
  if (s == "infinite") return PeelLaw::infinite;
  throw DomainError("unknown peeling law '" + s + "'");
}

// ---------------------------------------------------------------------------
// Chains

namespace {

long chain_lower(ChainRegime r, long m) {
  switch (r) {
    case ChainRegime::infinite: return 1 - m;
    case ChainRegime::pointed: return -m;
    case ChainRegime::locally_largest: return m % 2 == 1 ? -(m + 1) / 2 : -m / 2;
  }
  return 0;
}

double chain_weight(ChainRegime r, long m, long k, const NuTable& nu) {
  if (k < chain_lower(r, m)) return 0.0;
  const double dm = static_cast<double>(m);
  const double dk = static_cast<double>(k);
  switch (r) {
    case ChainRegime::infinite: return nu(k) * h_up(dm + dk) / h_up(dm);
    case ChainRegime::pointed: return nu(k) * h_down(dm + dk) / h_down(dm);
    case ChainRegime::locally_largest: {
      const double w = nu(k) * nu(-1 - m - k) / nu(-1 - m);
      return (m % 2 == 1 && k == -(m + 1) / 2) ? 0.5 * w : w;
    }
  }
  return 0.0;
}

double chain_weight_real(ChainRegime r, long m, double x, const NuTable& nu) {
  const double dm = static_cast<double>(m);
  switch (r) {
    case ChainRegime::infinite: return nu_beyond(nu, x) * h_up(dm + x) / h_up(dm);
    case ChainRegime::pointed: return nu_beyond(nu, x) * h_down(dm + x) / h_down(dm);
    case ChainRegime::locally_largest:
      return nu_beyond(nu, x) * nu_beyond(nu, -1.0 - dm - x) / nu(-1 - m);
  }
  return 0.0;
}

}  // namespace

double chain_probability(ChainRegime regime, long m, long k, const NuTable& nu) {
  if (m < 1) throw DomainError("chain_probability: m must be >= 1");
  return chain_weight(regime, m, k, nu);
}

double chain_total_mass(ChainRegime regime, long m, const NuTable& nu) {
  if (m < 1) throw DomainError("chain_total_mass: m must be >= 1");
  const long k_max = nu.k_max() + m + 1;
  return sum_with_tail([&](long k) { return chain_weight(regime, m, k, nu); },
                       [&](double x) { return chain_weight_real(regime, m, x, nu); },
                       chain_lower(regime, m), k_max, chain_tail_power(regime, nu.theta()));
}

long step_perimeter_chain(ChainRegime regime, long m, const NuTable& nu, Rng& rng) {
  if (m < 1) throw DomainError("step_perimeter_chain: m must be >= 1");
  const long k = sample_fronts([&](long j) { return chain_weight(regime, m, j, nu); },
                               chain_lower(regime, m), direct_range(m),
                               chain_tail_power(regime, nu.theta()), rng);
  const long next = m + k;
  if (regime == ChainRegime::locally_largest && 2 * next < m - 1)
    throw ConsistencyError("step_perimeter_chain: locally largest chain went below (m-1)/2");
  return next;
}

// ---------------------------------------------------------------------------
// Peeling kernel

PeelKernel::PeelKernel(const NuTable& nu) : nu_(&nu) {}

double PeelKernel::weight(PeelLaw law, long m, long j) const {
  if (j < -m) return 0.0;
  const NuTable& nu = *nu_;
  const double dm = static_cast<double>(m);
  if (law == PeelLaw::free) {
    const double w = nu(j) * nu(-1 - m - j) / nu(-1 - m);
    return j < 0 ? 0.5 * w : w;
  }
  const auto h = law == PeelLaw::infinite ? h_up : h_down;
  if (j >= 0) return nu(j) * h(dm + static_cast<double>(j)) / h(dm);
  const auto [w1, w2] = g_sides(law, m, j);
  return w1 + w2;
}

std::pair<double, double> PeelKernel::g_sides(PeelLaw law, long m, long j) const {
  if (j >= 0 || j < -m) throw DomainError("g_sides: j must lie in [-m, -1]");
  const NuTable& nu = *nu_;
  const long k1 = -1 - j;
  const long k2 = m + j;
  if (law == PeelLaw::free) {
    const double w = 0.5 * nu(j) * nu(-1 - m - j) / nu(-1 - m);
    return {0.5 * w, 0.5 * w};
  }
  const auto h = law == PeelLaw::infinite ? h_up : h_down;
  const double hm = h(static_cast<double>(m));
  return {0.5 * nu(-1 - k2) * h(static_cast<double>(k1)) / hm,
          0.5 * nu(-1 - k1) * h(static_cast<double>(k2)) / hm};
}

double PeelKernel::total_mass(PeelLaw law, long m) const {
  if (m < 1) throw DomainError("PeelKernel::total_mass: m must be >= 1");
  const NuTable& nu = *nu_;
  const double dm = static_cast<double>(m);
  const auto real_w = [&](double x) {
    switch (law) {
      case PeelLaw::free: return nu_beyond(nu, x) * nu_beyond(nu, -1.0 - dm - x) / nu(-1 - m);
      case PeelLaw::infinite: return nu_beyond(nu, x) * h_up(dm + x) / h_up(dm);
      case PeelLaw::pointed: return nu_beyond(nu, x) * h_down(dm + x) / h_down(dm);
    }
    return 0.0;
  };
  return sum_with_tail([&](long j) { return weight(law, m, j); }, real_w, -m, nu.k_max(),
                       up_tail_power(law, nu.theta()));
}

double PeelKernel::expected_f_up_after(long m) const {
  const NuTable& nu = *nu_;
  const double dm = static_cast<double>(m);
  const auto after = [&](long j) {
    if (j >= 0) return f_up(nu, m + j);
    return f_up(nu, -1 - j) + f_up(nu, m + j);
  };
  const auto real_w = [&](double x) {
    const double p = nu_beyond(nu, x) * nu_beyond(nu, -1.0 - dm - x) / nu(-1 - m);
    return p * h_up(dm + x) * 2.0 * nu.gamma() / nu_beyond(nu, -1.0 - dm - x);
  };
  return sum_with_tail([&](long j) { return weight(PeelLaw::free, m, j) * after(j); }, real_w, -m,
                       nu.k_max(), up_tail_power(PeelLaw::infinite, nu.theta()));
}

double PeelKernel::expected_area_after(long m) const {
  const NuTable& nu = *nu_;
  const double dm = static_cast<double>(m);
  const auto after = [&](long j) {
    if (j >= 0) return f_down(nu, m + j);
    const long k1 = -1 - j;
    const long k2 = m + j;
    const double internal = (k1 == 0 ? 1.0 : 0.0) + (k2 == 0 ? 1.0 : 0.0);
    return internal + (k1 > 0 ? f_down(nu, k1) : 0.0) + (k2 > 0 ? f_down(nu, k2) : 0.0);
  };
  const auto real_w = [&](double x) {
    const double p = nu_beyond(nu, x) * nu_beyond(nu, -1.0 - dm - x) / nu(-1 - m);
    return p * h_down(dm + x) * 2.0 * nu.gamma() / nu_beyond(nu, -1.0 - dm - x);
  };
  return sum_with_tail([&](long j) { return weight(PeelLaw::free, m, j) * after(j); }, real_w, -m,
                       nu.k_max(), up_tail_power(PeelLaw::pointed, nu.theta()));
}

double PeelKernel::checked_mass(PeelLaw law, long m) const {
  // holes above this size are sampled without a fresh normalization check
  constexpr long kCheckedUpTo = 1024;
  if (m > kCheckedUpTo) return 1.0;
  const auto key = std::make_pair(static_cast<int>(law), m);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = mass_cache_.find(key);
    if (it != mass_cache_.end()) return it->second;
  }
  const double mass = total_mass(law, m);
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    std::ostringstream os;
    os << "peeling step law (" << to_string(law) << ", m = " << m << ") has total mass " << mass
       << "; the nu table is inconsistent";
    throw ConsistencyError(os.str());
  }
  std::lock_guard<std::mutex> lock(mutex_);
  mass_cache_.emplace(key, mass);
  return mass;
}

PeelEvent PeelKernel::sample(PeelLaw law, long m, Rng& rng) const {
  if (m < 1) throw DomainError("PeelKernel::sample: m must be >= 1");
  checked_mass(law, m);
  const long j = sample_fronts([&](long s) { return weight(law, m, s); }, -m, direct_range(m),
                               up_tail_power(law, nu_->theta()), rng);
  PeelEvent e;
  if (j >= 0) {
    e.kind = PeelEvent::Kind::C;
    e.k = j + 1;
    if (law != PeelLaw::free) e.distinguished_side = 1;
    return e;
  }
  e.kind = PeelEvent::Kind::G;
  e.k1 = -1 - j;
  e.k2 = m + j;
  if (law != PeelLaw::free) {
    const auto [w1, w2] = g_sides(law, m, j);
    e.distinguished_side = uniform_open(rng) * (w1 + w2) < w1 ? 1 : 2;
    const long k = e.distinguished_side == 1 ? e.k1 : e.k2;
    if (k == 0) {
      if (law == PeelLaw::infinite)
        throw ConsistencyError("infinite law selected an empty side as the distinguished hole");
      e.absorbed = true;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Explored map

ExploredMap::ExploredMap(long half_perimeter, PeelLaw law) : law_(law) {
  if (half_perimeter < 1) throw DomainError("ExploredMap: half-perimeter must be >= 1");
  Hole h;
  for (long i = 0; i < 2 * half_perimeter; ++i) {
    h.vertices.push_back(next_vertex_++);
    h.heights.push_back(0);
  }
  holes_.push_back(std::move(h));
  vertices_ = 2 * half_perimeter;
  edges_ = 2 * half_perimeter;
  if (law != PeelLaw::free) distinguished_ = 0;
}

std::vector<long> ExploredMap::half_perimeters() const {
  std::vector<long> out;
  for (const Hole& h : holes_)
    if (h.open) out.push_back(h.half_perimeter());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

PeelLaw ExploredMap::hole_law(int h) const {
  if (distinguished_ && *distinguished_ == h) return law_;
  return PeelLaw::free;
}

void ExploredMap::freeze(int h) {
  Hole& hole = holes_.at(h);
  if (!hole.open) throw DomainError("ExploredMap::freeze: hole is closed");
  hole.frozen = true;
}

std::vector<int> ExploredMap::apply(const PeelEvent& e, int new_tag) {
  if (e.hole < 0 || e.hole >= static_cast<int>(holes_.size()))
    throw DomainError("ExploredMap::apply: no such hole");
  Hole& hole = holes_[e.hole];
  if (!hole.open || hole.frozen) throw DomainError("ExploredMap::apply: hole is closed or frozen");
  const long n = static_cast<long>(hole.vertices.size());
  const long m = n / 2;
  const bool was_distinguished = distinguished_ && *distinguished_ == e.hole;
  ++steps_;

  if (e.kind == PeelEvent::Kind::C) {
    if (e.k < 1) throw DomainError("ExploredMap::apply: C_k needs k >= 1");
    const long fresh = 2 * e.k - 2;
    const long v = hole.vertices.back();
    hole.vertices.pop_back();
    hole.heights.pop_back();
    const long base = next_vertex_;
    next_vertex_ += fresh;
    for (long i = fresh - 1; i >= 0; --i) hole.vertices.push_front(base + i);
    hole.vertices.push_front(v);
    for (long i = 0; i < 2 * e.k - 1; ++i) hole.heights.push_front(new_tag);
    vertices_ += fresh;
    edges_ += 2 * e.k - 1;
    faces_ += 1;
    return {e.hole};
  }

  const long k1 = e.k1;
  const long k2 = e.k2;
  if (k1 < 0 || k2 < 0 || k1 + k2 != m - 1) throw DomainError("ExploredMap::apply: G needs k1 + k2 = m - 1");
  // Gluing (c_{n-1}, c_0) onto (c_{2k1}, c_{2k1+1}) identifies c_{2k1} with c_0
  // and c_{2k1+1} with c_{n-1}; a side of length 0 leaves its vertex internal.
  Hole side;  // the shorter side, moved out; the longer one stays in `hole`
  bool moved_is_k1 = false;
  if (k1 <= k2) {
    moved_is_k1 = true;
    for (long i = 0; i < 2 * k1; ++i) {
      side.vertices.push_back(hole.vertices.front());
      side.heights.push_back(hole.heights.front());
      hole.vertices.pop_front();
      hole.heights.pop_front();
    }
    hole.vertices.pop_front();  // c_{2k1}: merged into c_0, or internal if k1 == 0
    hole.heights.pop_front();   // the glued edge
    if (k2 > 0) {
      hole.vertices.pop_front();  // c_{2k1+1}, merged into c_{n-1}
      const long last = hole.vertices.back();
      hole.vertices.pop_back();
      hole.vertices.push_front(last);
      hole.heights.pop_back();  // the peeled edge
    } else {
      hole.vertices.clear();  // m == 1: c_1 becomes internal as well
      hole.heights.clear();
    }
  } else {
    const long last = hole.vertices.back();
    hole.vertices.pop_back();
    hole.heights.pop_back();
    std::deque<long> bv;
    std::deque<int> bt;
    if (k2 > 0) {
      for (long i = 0; i < 2 * k2 - 1; ++i) {
        bv.push_front(hole.vertices.back());
        hole.vertices.pop_back();
      }
      bv.push_front(last);
      hole.vertices.pop_back();  // c_{2k1+1}, merged into c_{n-1}
    }
    for (long i = 0; i < 2 * k2; ++i) {
      bt.push_front(hole.heights.back());
      hole.heights.pop_back();
    }
    hole.vertices.pop_back();  // c_{2k1}, merged into c_0
    hole.heights.pop_back();   // the glued edge
    side.vertices = std::move(bv);
    side.heights = std::move(bt);
  }

  edges_ -= 1;
  if (k1 > 0 && k2 > 0) {
    vertices_ -= 2;
  } else if (k1 + k2 > 0) {
    vertices_ -= 1;
    internal_vertices_ += 1;
  } else {
    internal_vertices_ += 2;
  }

  if (hole.vertices.size() % 2 != 0 || hole.heights.size() != hole.vertices.size() ||
      side.vertices.size() % 2 != 0 || side.heights.size() != side.vertices.size())
    ++parity_violations_;

  std::vector<int> produced;
  int k1_index = -1;
  int k2_index = -1;
  const int stay_index = e.hole;
  if (hole.vertices.empty()) {
    hole.open = false;
    --open_holes_;
    ++closures_;
  } else {
    produced.push_back(stay_index);
    (moved_is_k1 ? k2_index : k1_index) = stay_index;
  }
  if (!side.vertices.empty()) {
    const int idx = static_cast<int>(holes_.size());
    holes_.push_back(std::move(side));  // invalidates `hole`
    ++open_holes_;
    ++cycles_created_;
    produced.push_back(idx);
    (moved_is_k1 ? k1_index : k2_index) = idx;
  }

  if (was_distinguished) {
    if (e.absorbed) {
      distinguished_.reset();
      absorbed_ = true;
    } else {
      const int target = e.distinguished_side == 1 ? k1_index : k2_index;
      if (target < 0) throw ConsistencyError("ExploredMap::apply: distinguished hole moved to an empty side");
      distinguished_ = target;
    }
  }
  return produced;
}

void ExploredMap::check_invariants() const {
  long on_holes = 0;
  long open = 0;
  std::set<long> seen;
  for (std::size_t i = 0; i < holes_.size(); ++i) {
    const Hole& h = holes_[i];
    if (!h.open) continue;
    ++open;
    if (h.vertices.size() % 2 != 0 || h.vertices.empty())
      throw ConsistencyError("ExploredMap: hole " + std::to_string(i) + " has odd or zero length");
    if (h.heights.size() != h.vertices.size())
      throw ConsistencyError("ExploredMap: hole " + std::to_string(i) + " has mismatched height tags");
    for (long v : h.vertices)
      if (!seen.insert(v).second)
        throw ConsistencyError("ExploredMap: vertex " + std::to_string(v) + " lies on two boundary positions");
    on_holes += static_cast<long>(h.vertices.size());
  }
  if (open != open_holes_) throw ConsistencyError("ExploredMap: open-hole counter is off");
  if (on_holes + internal_vertices_ != vertices_)
    throw ConsistencyError("ExploredMap: boundary plus internal vertices differ from the vertex count");
  if (euler() != 2) throw ConsistencyError("ExploredMap: Euler characteristic " + std::to_string(euler()));
  if (cycles_created_ != closures_ + open_holes_)
    throw ConsistencyError("ExploredMap: created cycles are not all accounted for");
}

PeelEvent peel_step(ExploredMap& map, int hole, const PeelKernel& kernel, Rng& rng, int new_tag) {
  const Hole& h = map.holes().at(hole);
  PeelEvent e = kernel.sample(map.hole_law(hole), h.half_perimeter(), rng);
  e.hole = hole;
  e.produced = map.apply(e, new_tag);
  return e;
}

std::pair<double, double> cycle_area_functionals(const ExploredMap& map, const NuTable& nu) {
  NeumaierSum up;
  NeumaierSum area;
  area.add(static_cast<double>(map.internal_vertices()));
  for (const Hole& h : map.holes()) {
    if (!h.open) continue;
    up.add(f_up(nu, h.half_perimeter()));
    area.add(f_down(nu, h.half_perimeter()));
  }
  return {up.value(), area.value()};
}

PeelOutcome peel_until_done(long l, const PeelKernel& kernel, Rng& rng, long budget, std::ostream* log) {
  ExploredMap map(l, PeelLaw::free);
  std::vector<int> stack{0};
  PeelOutcome out;
  while (!stack.empty()) {
    const int h = stack.back();
    if (!map.holes()[h].open) {
      stack.pop_back();
      continue;
    }
    if (map.steps() >= budget) {
      out.censored = true;
      break;
    }
    const PeelEvent e = peel_step(map, h, kernel, rng);
    if (log) write_event_ndjson(*log, map.steps(), e, map);
    for (int p : e.produced)
      if (p != h) stack.push_back(p);
  }
  if (!out.censored) {
    if (map.open_holes() != 0 || map.euler() != 2) {
      std::ostringstream os;
      os << "peel_until_done: finished with " << map.open_holes() << " open holes and V - E + F = "
         << map.euler();
      throw ConsistencyError(os.str());
    }
  }
  out.vertices = map.vertices();
  out.edges = map.edges();
  out.faces = map.faces() - 1;
  out.steps = map.steps();
  out.euler_residual = out.censored ? 0 : map.euler() - 2;
  out.parity_violations = map.parity_violations();
  return out;
}

namespace {

// Hypothesis (H) for the layer algorithm: along the stored order the tags read
// h+1, ..., h+1, h, ..., h, so the last edge is at height h and, when any
// height-(h+1) edge exists, it is followed clockwise by one.
void assert_layout(const Hole& hole, int h, int index) {
  bool seen_low = false;
  for (int t : hole.heights) {
    if (t == h) {
      seen_low = true;
    } else if (t != h + 1 || seen_low) {
      std::ostringstream os;
      os << "layer_peel: hole " << index << " violates the height layout at level " << h;
      throw ConsistencyError(os.str());
    }
  }
}

enum class Activity { none, mixed, level_only };

Activity activity(const Hole& hole, int h) {
  if (!hole.open || hole.frozen) return Activity::none;
  if (hole.heights.back() != h) return Activity::none;
  return hole.heights.front() == h + 1 ? Activity::mixed : Activity::level_only;
}

}  // namespace

LayerRun layer_peel(long l, PeelLaw law, const PeelKernel& kernel, Rng& rng, int r_max, long budget) {
  ExploredMap map(l, law);
  LayerRun run;
  run.layers.push_back(map.half_perimeters());
  int h = 0;
  std::vector<int> mixed;
  std::vector<int> level_only{0};
  const auto push = [&](int idx) {
    switch (activity(map.holes()[idx], h)) {
      case Activity::mixed: mixed.push_back(idx); break;
      case Activity::level_only: level_only.push_back(idx); break;
      case Activity::none: break;
    }
  };
  const auto pop_valid = [&](std::vector<int>& st, Activity want) -> int {
    while (!st.empty()) {
      const int idx = st.back();
      st.pop_back();
      if (activity(map.holes()[idx], h) == want) return idx;
    }
    return -1;
  };
  while (h < r_max) {
    int idx = pop_valid(mixed, Activity::mixed);
    if (idx < 0) idx = pop_valid(level_only, Activity::level_only);
    if (idx < 0) {
      if (map.open_holes() == 0) break;
      ++h;
      run.layers.push_back(map.half_perimeters());
      if (h >= r_max) break;
      for (int i = static_cast<int>(map.holes().size()) - 1; i >= 0; --i) push(i);
      continue;
    }
    if (map.steps() >= budget) {
      run.truncated = true;
      break;
    }
    assert_layout(map.holes()[idx], h, idx);
    const PeelEvent e = peel_step(map, idx, kernel, rng, h + 1);
    // keep working on the current hole first
    for (auto it = e.produced.rbegin(); it != e.produced.rend(); ++it)
      if (*it != idx) push(*it);
    if (std::find(e.produced.begin(), e.produced.end(), idx) != e.produced.end()) push(idx);
  }
  if (map.cycles_created() != map.closures() + map.open_holes())
    throw ConsistencyError("layer_peel: created cycles are not all accounted for");
  run.steps = map.steps();
  run.cycles_created = map.cycles_created();
  run.closures = map.closures();
  return run;
}

void write_event_ndjson(std::ostream& os, long step, const PeelEvent& e, const ExploredMap& map) {
  os << "{\"step\":" << step << ",\"hole\":" << e.hole << ",\"kind\":";
  if (e.kind == PeelEvent::Kind::C) {
    os << "\"C\",\"k\":" << e.k;
  } else {
    os << "\"G\",\"k1\":" << e.k1 << ",\"k2\":" << e.k2;
  }
  os << ",\"perims_after\":[";
  for (std::size_t i = 0; i < e.produced.size(); ++i) {
    if (i) os << ',';
    os << map.holes()[e.produced[i]].half_perimeter();
  }
  os << "]}\n";
}

void write_layers_csv(std::ostream& os, const LayerRun& run) {
  os << "r,rank,half_perimeter\n";
  for (std::size_t r = 0; r < run.layers.size(); ++r)
    for (std::size_t i = 0; i < run.layers[r].size(); ++i)
      os << r << ',' << i << ',' << run.layers[r][i] << '\n';
}

}  // namespace gfpeel
