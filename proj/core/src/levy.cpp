#include "gfpeel/levy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "gfpeel/errors.hpp"

namespace gfpeel {

namespace {

using json = nlohmann::json;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// Sum_{n>=2} coef(n) y^{n-2}, stopping once terms are negligible.
template <class Coef>
double reduced_series(double y, Coef coef) {
  double sum = 0.0;
  double ypow = 1.0;
  for (int n = 2; n < 60; ++n) {
    const double term = coef(n) * ypow;
    sum += term;
    if (n > 4 && std::abs(term) < 1e-18 * std::abs(sum)) break;
    ypow *= y;
  }
  return sum;
}

double pow_abs(double y, double e) { return e == 0.0 ? 1.0 : std::pow(std::abs(y), e); }

}  // namespace

double LevyMeasure::density(double y) const {
  if (!has_density() || y == 0.0 || y <= lower || y >= upper) return 0.0;
  return pow_abs(y, small_jump_exponent) * reduced(y);
}

LevyMeasure zero_measure() {
  LevyMeasure m;
  m.descriptor = R"({"kind":"atoms","atoms":[]})";
  return m;
}

LevyMeasure atomic_measure(std::vector<Atom> atoms) {
  LevyMeasure m;
  json arr = json::array();
  for (const Atom& a : atoms) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.position))
      throw DomainError("atomic_measure: atoms need finite position and non-negative mass");
    arr.push_back({{"position", a.position}, {"mass", a.mass}});
  }
  m.atoms = std::move(atoms);
  m.descriptor = json{{"kind", "atoms"}, {"atoms", arr}}.dump();
  return m;
}

double integrate_measure(const LevyMeasure& m, const MeasureIntegrand& g, double lo, double hi,
                         const QuadratureSpec& spec) {
  NeumaierSum total;
  for (const Atom& a : m.atoms) {
    if (a.position == 0.0 || a.mass == 0.0) continue;
    if (a.position > lo && a.position < hi)
      total.add(a.mass * pow_abs(a.position, g.s) * g.r(a.position));
  }
  if (!m.has_density()) return total.value();

  const double a = std::max(lo, m.lower);
  const double b = std::min(hi, m.upper);
  if (!(a < b)) return total.value();

  std::vector<double> cuts{a};
  for (double c : {-1.0, 0.0, 1.0})
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);

  const double p = m.small_jump_exponent;
  const double e = g.s + p;
  const auto full = [&](double y) { return pow_abs(y, e) * g.r(y) * m.reduced(y); };

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = cuts[i];
    const double d = cuts[i + 1];
    if (d == 0.0 || c == 0.0) {
      // y = -+ L u^k with k = 1/(1+e) absorbs |y|^e and the Jacobian exactly.
      if (!(e > -1.0)) return kInf;
      const double len = (d == 0.0) ? -c : d;
      const double dir = (d == 0.0) ? -1.0 : 1.0;
      const double k = 1.0 / (1.0 + e);
      const double scale = std::pow(len, 1.0 + e) * k;
      const auto h = [&](double u) {
        const double y = dir * len * std::pow(u, k);
        if (y == 0.0) return 0.0;
        return scale * g.r(y) * m.reduced(y);
      };
      total.add(integrate(h, 0.0, 1.0, spec).value);
      continue;
    }
    Endpoint elo{};
    Endpoint ehi{};
    if (std::isinf(d)) {
      const double rate = m.upper_tail_rate - g.growth_upper;
      if (!(rate > 0.0)) return kInf;
      if (std::isfinite(rate)) ehi = Endpoint::exp_decay(rate);
    }
    if (std::isinf(c)) {
      const double rate = m.lower_tail_rate - g.growth_lower;
      if (!(rate > 0.0)) return kInf;
      if (std::isfinite(rate)) elo = Endpoint::exp_decay(rate);
    }
    total.add(integrate(full, c, d, spec, elo, ehi).value);
  }
  return total.value();
}

double compensator(Compensation c, double q, double y) {
  if (c == Compensation::exponential) return std::expm1(q * y) - q * std::expm1(y);
  if (std::abs(y) < 1.0) return std::expm1(q * y) - q * y;
  return std::expm1(q * y);
}

double compensator_reduced(Compensation c, double q, double y) {
  if (y == 0.0) {
    return c == Compensation::exponential ? 0.5 * (q * q - q) : 0.5 * q * q;
  }
  if (c == Compensation::exponential) {
    if (std::abs(y) * std::max(1.0, std::abs(q)) < 0.5) {
      double qn = q;  // q^n
      double fact = 1.0;
      return reduced_series(y, [&](int n) {
        qn *= q;
        fact *= n;
        return (qn - q) / fact;
      });
    }
    return (std::expm1(q * y) - q * std::expm1(y)) / (y * y);
  }
  if (std::abs(y) < 1.0) {
    if (std::abs(q * y) < 0.5) {
      double qn = q;
      double fact = 1.0;
      return reduced_series(y, [&](int n) {
        qn *= q;
        fact *= n;
        return qn / fact;
      });
    }
    return (std::expm1(q * y) - q * y) / (y * y);
  }
  return std::expm1(q * y) / (y * y);
}

namespace {

MeasureIntegrand exponent_integrand(Compensation c, double q) {
  MeasureIntegrand g;
  g.s = 2.0;
  g.r = [c, q](double y) { return compensator_reduced(c, q, y); };
  if (c == Compensation::exponential) {
    g.growth_upper = std::max(q, 1.0);
  } else {
    g.growth_upper = std::max(q, 0.0);
  }
  g.growth_lower = std::max(-q, 0.0);
  return g;
}

// (1 - e^y)^q on y < 0, as |y|^q * ((1-e^y)/|y|)^q.
MeasureIntegrand negative_power_integrand(double q) {
  MeasureIntegrand g;
  g.s = q;
  g.r = [q](double y) { return std::pow(-std::expm1(y) / -y, q); };
  return g;
}

}  // namespace

void validate(const LevyCharacteristics& chars) {
  if (!(chars.sigma2 >= 0.0)) throw DomainError("LevyCharacteristics: sigma2 must be >= 0");
  if (!(chars.killing >= 0.0)) throw DomainError("LevyCharacteristics: killing must be >= 0");
  if (!std::isfinite(chars.b) || !std::isfinite(chars.alpha))
    throw DomainError("LevyCharacteristics: b and alpha must be finite");
  const LevyMeasure& m = chars.measure;
  for (const Atom& a : m.atoms)
    if (!(a.mass >= 0.0)) throw DomainError("LevyMeasure: negative atom mass");
  const MeasureIntegrand square{[](double) { return 1.0; }, 2.0, 0.0, 0.0};
  const MeasureIntegrand one{[](double) { return 1.0; }, 0.0, 0.0, 0.0};
  const double near = integrate_measure(m, square, -1.0, 1.0);
  const double far = integrate_measure(m, one, -kInf, -1.0) + integrate_measure(m, one, 1.0, kInf);
  if (!std::isfinite(near) || !std::isfinite(far))
    throw DomainError("LevyMeasure: int (1 ^ y^2) dLambda is not finite");
  if (chars.compensation == Compensation::exponential) {
    const MeasureIntegrand ey{[](double y) { return std::exp(y); }, 0.0, 1.0, 0.0};
    if (!std::isfinite(integrate_measure(m, ey, 1.0, kInf)))
      throw DomainError("LevyMeasure: int_{y>1} e^y dLambda is not finite");
  }
}

double psi_eval(const LevyCharacteristics& chars, double q, const QuadratureSpec& spec) {
  const double jumps =
      integrate_measure(chars.measure, exponent_integrand(chars.compensation, q), -kInf, kInf, spec);
  if (!std::isfinite(jumps)) return kInf;
  return -chars.killing + 0.5 * chars.sigma2 * q * q + chars.b * q + jumps;
}

double kappa_eval(const LevyCharacteristics& chars, double q, const QuadratureSpec& spec) {
  const double psi = psi_eval(chars, q, spec);
  if (!std::isfinite(psi)) return kInf;
  const double neg = integrate_measure(chars.measure, negative_power_integrand(q), -kInf, 0.0, spec);
  if (!std::isfinite(neg)) return kInf;
  return psi + neg;
}

CumulantFunction make_cumulant(LevyCharacteristics chars, Interval domain) {
  CumulantFunction k;
  k.chars = std::move(chars);
  k.domain = domain;
  k.kappa = [c = k.chars](double q) { return kappa_eval(c, q); };
  const RootPair roots = find_roots(k, domain);
  k.omega_minus = roots.omega_minus;
  k.omega_plus = roots.omega_plus;
  return k;
}

CumulantFunction stable_cumulant(double theta) {
  CumulantFunction k;
  k.chars = stable_family_characteristics(theta).chars;
  k.domain = {theta, 2.0 * theta + 1.0};
  k.kappa = [theta](double q) { return kappa_theta(theta, q); };
  const double pad = 1e-9;
  const RootPair roots = find_roots(k, {theta + pad, 2.0 * theta + 1.0 - pad});
  k.omega_minus = roots.omega_minus;
  k.omega_plus = roots.omega_plus;
  return k;
}

RootPair find_roots(const CumulantFunction& kappa, Interval search) {
  if (!(search.lo < search.hi)) throw DomainError("find_roots: empty search interval");
  constexpr int kGrid = 256;
  std::vector<double> xs(kGrid), fs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = search.lo + (search.hi - search.lo) * i / (kGrid - 1);
    fs[i] = kappa(xs[i]);
  }

  struct Root {
    double x;
    bool increasing;
  };
  std::vector<Root> roots;

  const auto refine = [&](double a, double fa, double b) {
    for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      const double fm = kappa(mid);
      if (fm == 0.0) return mid;
      if ((fm < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    double x = 0.5 * (a + b);
    // Newton polish with a central difference; kept only if it improves |kappa|.
    for (int it = 0; it < 2; ++it) {
      const double fx = kappa(x);
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      const double d = (kappa(x + h) - kappa(x - h)) / (2.0 * h);
      if (!(d != 0.0) || !std::isfinite(d)) break;
      const double nx = x - fx / d;
      if (!(std::abs(kappa(nx)) < std::abs(fx))) break;
      x = nx;
    }
    return x;
  };

  for (int i = 0; i + 1 < kGrid; ++i) {
    const double fa = fs[i];
    const double fb = fs[i + 1];
    if (!std::isfinite(fa) || !std::isfinite(fb)) continue;
    if (fa == 0.0) {
      const bool inc = (i + 1 < kGrid) ? fb > 0.0 : (i > 0 && fs[i - 1] < 0.0);
      roots.push_back({xs[i], inc});
      continue;
    }
    if ((fa < 0.0) != (fb < 0.0) && fb != 0.0)
      roots.push_back({refine(xs[i], fa, xs[i + 1]), fb > 0.0});
  }
  if (std::isfinite(fs[kGrid - 1]) && fs[kGrid - 1] == 0.0)
    roots.push_back({xs[kGrid - 1], fs[kGrid - 2] < 0.0});

  RootPair out;
  for (const Root& r : roots) {
    if (!r.increasing && !out.omega_minus) out.omega_minus = r.x;
    if (r.increasing) out.omega_plus = r.x;
  }
  return out;
}

LevyMeasure shifted_measure(const LevyMeasure& base, double omega) {
  LevyMeasure out;
  const double p = base.small_jump_exponent;
  out.small_jump_exponent = p;
  const bool has_negative_density = base.has_density() && base.lower < 0.0;

  if (base.has_density()) {
    out.reduced = [base, omega, p](double x) {
      double v = 0.0;
      if (x > base.lower && x < base.upper) v += base.reduced(x);
      if (x < 0.0) {
        // image of the negative part under x -> ln(1 - e^x), an involution of (-inf, 0)
        const double y = std::log1p(-std::exp(x));
        if (y > base.lower && y < 0.0 && std::isfinite(y)) {
          const double jac = std::exp(x) / -std::expm1(x);
          v += pow_abs(y, p) * base.reduced(y) * jac / pow_abs(x, p);
        }
      }
      return std::exp(omega * x) * v;
    };
    out.lower = has_negative_density ? -kInf : base.lower;
    out.upper = base.upper;
    out.upper_tail_rate = base.upper_tail_rate - omega;
    out.lower_tail_rate =
        has_negative_density ? std::min(omega + p + 1.0, base.lower_tail_rate + omega)
                             : base.lower_tail_rate + omega;
  }

  for (const Atom& a : base.atoms) {
    if (a.position == 0.0) continue;
    out.atoms.push_back({a.position, a.mass * std::exp(omega * a.position)});
    if (a.position < 0.0) {
      const double one_minus = -std::expm1(a.position);
      out.atoms.push_back({std::log(one_minus), a.mass * std::pow(one_minus, omega)});
    }
  }

  if (!base.descriptor.empty()) {
    out.descriptor = json{{"kind", "density"},
                          {"family", "shifted"},
                          {"omega", omega},
                          {"base", json::parse(base.descriptor)}}
                         .dump();
  }
  return out;
}

LevyCharacteristics shift_exponent(const CumulantFunction& kappa, double omega,
                                   const QuadratureSpec& spec) {
  const double k_omega = kappa(omega);
  if (!std::isfinite(k_omega))
    throw DomainError("shift_exponent: omega outside the finiteness domain of kappa");
  const double tol = 1e-12 * std::max(1.0, std::abs(omega));
  if (k_omega > tol) {
    std::ostringstream os;
    os << "shift_exponent: kappa(omega) = " << k_omega << " > 0";
    throw DomainError(os.str());
  }
  const LevyCharacteristics& base = kappa.chars;
  const LevyMeasure& lam = base.measure;

  // Drift of the shifted exponent under the truncated compensator:
  //   sigma^2 omega + b + int [e^{omega y} y 1_{|y|<1} - c(y)] dLambda
  //                     + int_{y<0} e^{omega x} x 1_{|x|<1} dLambda,   x = ln(1 - e^y),
  // with c(y) = e^y - 1 (exponential) or y 1_{|y|<1} (truncated) the base compensator.
  MeasureIntegrand first;
  first.s = 2.0;
  if (base.compensation == Compensation::exponential) {
    first.r = [omega](double y) {
      if (std::abs(y) >= 1.0) return -std::expm1(y) / (y * y);
      if (std::abs(y) * std::max(1.0, std::abs(omega)) < 0.1) {
        double wn = 1.0;  // omega^{n-1}
        double fact_nm1 = 1.0;
        return reduced_series(y, [&](int n) {
          wn *= omega;
          fact_nm1 *= (n - 1);
          return wn / fact_nm1 - 1.0 / (fact_nm1 * n);
        });
      }
      return (-std::expm1(y) + y * std::exp(omega * y)) / (y * y);
    };
    first.growth_upper = 1.0;
  } else {
    first.r = [omega](double y) {
      if (std::abs(y) >= 1.0) return 0.0;
      if (omega == 0.0) return 0.0;
      return omega * std::expm1(omega * y) / (omega * y);
    };
  }
  const double i1 = integrate_measure(lam, first, -kInf, kInf, spec);

  MeasureIntegrand second;
  second.s = 0.0;
  second.r = [omega](double y) {
    const double one_minus = -std::expm1(y);
    return std::log(one_minus) * std::pow(one_minus, omega);
  };
  const double i2 = integrate_measure(lam, second, -kInf, std::log1p(-std::exp(-1.0)), spec);

  LevyCharacteristics out;
  out.sigma2 = base.sigma2;
  out.b = base.sigma2 * omega + base.b + i1 + i2;
  out.killing = std::max(0.0, -k_omega);
  if (std::abs(k_omega) <= tol) out.killing = 0.0;
  out.alpha = base.alpha;
  out.measure = shifted_measure(lam, omega);
  out.compensation = Compensation::truncated;
  return out;
}

StableFamilyParams stable_params(double theta) {
  if (!(theta > 0.5 && theta <= 1.5)) throw DomainError("stable_params: theta must lie in (1/2, 3/2]");
  StableFamilyParams p;
  p.theta = theta;
  p.rho = 1.0 - 1.0 / (2.0 * theta);
  p.gamma_hyp = theta - 0.5;
  p.gammahat_hyp = 0.5;
  p.omega_minus = theta + 0.5;
  p.omega_plus = theta + 1.5;
  return p;
}

double kappa_theta(double theta, double q) {
  if (!(theta > 0.5 && theta <= 1.5)) throw DomainError("kappa_theta: theta must lie in (1/2, 3/2]");
  if (!(q > theta && q < 2.0 * theta + 1.0)) {
    std::ostringstream os;
    os << "kappa_theta: q = " << q << " outside (" << theta << ", " << 2.0 * theta + 1.0 << ")";
    throw DomainError(os.str());
  }
  return cos_pi(q - theta) * gamma_fn(q - theta) * gamma_fn(1.0 + 2.0 * theta - q) / kPi;
}

double kappa_theta_quotient(double theta, double q) {
  const double z = q - 2.0 * theta;
  if (is_nonpositive_integer(z)) return std::nan("");
  return cos_pi(q - theta) / sin_pi(z) * gamma_fn(q - theta) / gamma_fn(z);
}

LevyMeasure stable_theta_measure(double theta) {
  if (!(theta > 0.5 && theta <= 1.5))
    throw DomainError("stable_theta_measure: theta must lie in (1/2, 3/2]");
  const double c = gamma_fn(theta + 1.0) / kPi;
  const double s = sin_pi(theta - 0.5);
  LevyMeasure m;
  m.small_jump_exponent = -theta - 1.0;
  m.lower = -std::log(2.0);
  m.upper = (s == 0.0) ? 0.0 : kInf;
  m.upper_tail_rate = 2.0 * theta + 1.0;
  // Lambda(dy) = nu(e^y) e^y dy with nu(x) = c (x|1-x|)^{-theta-1} (times s for x > 1).
  m.reduced = [theta, c, s](double y) {
    if (y < 0.0) return c * std::exp(-theta * y) * std::pow(-std::expm1(y) / -y, -theta - 1.0);
    return c * s * std::exp(-theta * y) * std::pow(std::expm1(y) / y, -theta - 1.0);
  };
  m.descriptor = json{{"kind", "density"}, {"family", "stable_theta"}, {"theta", theta}}.dump();
  return m;
}

namespace {

double drift_direct(double theta) {
  const double t1 = gamma_fn(2.0 - theta) / (2.0 * gamma_fn(2.0 - 2.0 * theta) * sin_pi(theta));
  const double t2 = gamma_fn(theta + 1.0) * incomplete_beta(-theta, 2.0 - theta, 0.5) / kPi;
  return t1 + t2;
}

bool drift_has_pole(double theta) {
  return is_nonpositive_integer(2.0 - 2.0 * theta) || sin_pi(theta) == 0.0 ||
         is_nonpositive_integer(-theta) || is_nonpositive_integer(2.0 - theta);
}

}  // namespace

double stable_theta_drift(double theta, DriftBranch* branch) {
  if (!(theta > 0.5 && theta <= 1.5))
    throw DomainError("stable_theta_drift: theta must lie in (1/2, 3/2]");
  if (drift_has_pole(theta)) {
    if (branch) *branch = DriftBranch::two_sided_limit;
    constexpr double h = 1e-5;
    return 0.5 * (drift_direct(theta + h) + drift_direct(theta - h));
  }
  if (branch) *branch = DriftBranch::direct;
  return drift_direct(theta);
}

StableCharacteristics stable_family_characteristics(double theta) {
  StableCharacteristics out;
  out.chars.sigma2 = 0.0;
  out.chars.killing = 0.0;
  out.chars.b = stable_theta_drift(theta, &out.drift_branch);
  out.chars.measure = stable_theta_measure(theta);
  out.chars.compensation = Compensation::exponential;
  return out;
}

double killing_identity(const LevyCharacteristics& chars, const QuadratureSpec& spec) {
  const auto f = [&](double q) {
    MeasureIntegrand g;
    g.s = 2.0;
    g.r = [q](double y) {
      const double lead = compensator_reduced(Compensation::exponential, q, y);
      return lead + std::pow(-std::expm1(y) / -y, q) * std::pow(-y, q - 2.0);
    };
    g.growth_lower = 0.0;
    const double i = integrate_measure(chars.measure, g, -kInf, 0.0, spec);
    return -chars.killing + 0.5 * chars.sigma2 * q * q + chars.b * q + i;
  };
  return 15.0 * f(4.0) - 6.0 * f(5.0) - 10.0 * f(3.0);
}

std::optional<double> symmetry_exponent(const LevyMeasure& measure) {
  if (!measure.has_density()) return std::nullopt;
  const auto nu = [&](double x) { return measure.density(std::log(x)) / x; };
  const double x0 = 0.3;
  const double a = nu(x0);
  const double b = nu(1.0 - x0);
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return std::nullopt;
  // log(x^{-w} nu(x)) - log((1-x)^{-w} nu(1-x)) is affine in w; solve at the probe pair.
  double w = (std::log(a) - std::log(b)) / (std::log(x0) - std::log(1.0 - x0));
  if (w < -1e-9) return std::nullopt;
  w = std::max(w, 0.0);
  for (int i = 1; i <= 100; ++i) {
    const double x = 0.49 * i / 101.0 + 0.005;
    const double l = nu(x);
    const double r = nu(1.0 - x);
    if (!(l > 0.0) || !(r > 0.0)) return std::nullopt;
    const double ratio = std::pow(x / (1.0 - x), -w) * l / r;
    if (!(std::abs(ratio - 1.0) <= 1e-6)) return std::nullopt;
  }
  return w;
}

double hypergeometric_phi_plus(double theta, double z) {
  const double g = theta - 0.5;
  return -gamma_fn(g - z) * gamma_fn(1.5 + z) / (gamma_fn(-z) * gamma_fn(1.0 + z));
}

double hypergeometric_match(double theta, int grid_points) {
  if (!(theta > 0.5 && theta <= 1.5))
    throw DomainError("hypergeometric_match: theta must lie in (1/2, 3/2]");
  if (grid_points < 1) throw DomainError("hypergeometric_match: need at least one grid point");
  const double omega_plus = theta + 1.5;
  double worst = 0.0;
  for (int i = 1; i <= grid_points; ++i) {
    const double z = (theta - 0.5) * i / (grid_points + 1.0);
    worst = std::max(worst,
                     std::abs(kappa_theta(theta, omega_plus + z) - hypergeometric_phi_plus(theta, z)));
  }
  return worst;
}

IdentitySides three_halves_identity(double q, const QuadratureSpec& spec) {
  if (!(q > 1.5)) throw DomainError("three_halves_identity: q must exceed 3/2");
  // In t = 1 - x: ((1-t)^q - 1 + q t + t^q) ((1-t) t)^{-5/2} on (0, 1/2].
  const auto f = [q](double t) {
    double lead;
    if (t < 0.05) {
      double binom = 1.0;  // binom(q, n) (-1)^n, built incrementally
      double tn = 1.0;
      lead = 0.0;
      binom *= -q;
      for (int n = 2; n < 80; ++n) {
        binom *= -(q - n + 1) / n;
        const double term = binom * tn;
        lead += term;
        if (n > 4 && std::abs(term) < 1e-18 * std::abs(lead)) break;
        tn *= t;
      }
    } else {
      lead = (std::pow(1.0 - t, q) - 1.0 + q * t) / (t * t);
    }
    return (lead + std::pow(t, q - 2.0)) * std::pow(t, -0.5) * std::pow(1.0 - t, -2.5);
  };
  const double integral =
      integrate(f, 0.0, 0.5, spec, Endpoint::power(std::min(q, 2.0) - 2.5)).value;
  const double rsp = 1.0 / std::sqrt(kPi);
  return {gamma_ratio(q - 1.5, q - 3.0), -2.0 * q * rsp + 0.75 * rsp * integral};
}

}  // namespace gfpeel
