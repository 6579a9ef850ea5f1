#include "gfpeel/numerics.hpp"

#include <math.h>

#include <algorithm>
#include <array>
#include <sstream>
#include <vector>

#include "gfpeel/errors.hpp"

namespace gfpeel {

namespace {

bool is_pole(double x) { return x <= 0.0 && x == std::floor(x); }

[[noreturn]] void pole_error(const char* fn, double x) {
  std::ostringstream os;
  os << fn << ": Gamma pole at x = " << x;
  throw DomainError(os.str());
}

// ln Gamma(x) for x >= 1/2; the reentrant variant avoids the global signgam.
double log_gamma_positive(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

// Stirling remainder ln Gamma(z) - [(z-1/2)ln z - z + ln sqrt(2 pi)], z >= 15.
double stirling_tail(double z) {
  const double z2 = z * z;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0) / z2) / z2) / z2) / z;
}

}  // namespace

double sin_pi(double x) {
  if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
  double r = std::fmod(x, 2.0);
  if (r <= -1.0) r += 2.0;
  if (r > 1.0) r -= 2.0;
  if (r == 0.0 || r == 1.0) return 0.0;
  if (r > 0.5) r = 1.0 - r;
  if (r < -0.5) r = -1.0 - r;
  return std::sin(kPi * r);
}

double cos_pi(double x) {
  if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
  double r = std::fmod(std::abs(x), 2.0);
  if (r > 1.0) r = 2.0 - r;  // cos is even and 2-periodic; r in [0,1]
  if (r == 0.5) return 0.0;
  if (r > 0.5) return -sin_pi(r - 0.5);
  return sin_pi(0.5 - r);
}

LogGamma log_gamma(double x) {
  if (std::isnan(x)) throw DomainError("log_gamma: NaN argument");
  if (is_pole(x)) pole_error("log_gamma", x);
  if (x >= 0.5) return {log_gamma_positive(x), 1};
  // Gamma(x) Gamma(1-x) = pi / sin(pi x)
  const double s = sin_pi(x);
  const double v = std::log(kPi) - std::log(std::abs(s)) - log_gamma_positive(1.0 - x);
  return {v, s > 0.0 ? 1 : -1};
}

double gamma_fn(double x) {
  if (std::isnan(x)) throw DomainError("gamma_fn: NaN argument");
  if (is_pole(x)) pole_error("gamma_fn", x);
  return std::tgamma(x);
}

double gamma_ratio(double a, double b) {
  if (is_pole(a)) pole_error("gamma_ratio", a);
  if (is_pole(b)) return 0.0;
  if (a >= 15.0 && b >= 15.0) {
    // (a-1/2)ln a - (b-1/2)ln b - (a-b), arranged to avoid cancellation.
    const double d = a - b;
    const double lead = d * std::log(b) + (a - 0.5) * std::log1p(d / b) - d;
    return std::exp(lead + stirling_tail(a) - stirling_tail(b));
  }
  if (a < 0.0 && b < 0.0) {
    // reflection keeps far negative arguments off the large log-gamma difference
    return sin_pi(b) / sin_pi(a) * gamma_ratio(1.0 - b, 1.0 - a);
  }
  const LogGamma la = log_gamma(a);
  const LogGamma lb = log_gamma(b);
  return la.sign * lb.sign * std::exp(la.value - lb.value);
}

double incomplete_beta(double a, double b, double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("incomplete_beta: x must lie in (0,1)");
  if (a > 0.0 && b > 0.0 && x > (a + 1.0) / (a + b + 2.0)) {
    const double complete = std::exp(log_gamma(a).value + log_gamma(b).value - log_gamma(a + b).value);
    return complete - incomplete_beta(b, a, 1.0 - x);
  }
  // (1-t)^{b-1} = sum_n (1-b)_n t^n / n!, integrated term by term.
  NeumaierSum sum;
  double coef = 1.0;
  double xpow = std::pow(x, a);
  for (int n = 0; n < 200000; ++n) {
    const double denom = a + n;
    if (coef != 0.0) {
      if (denom == 0.0) {
        std::ostringstream os;
        os << "incomplete_beta: non-integrable singularity (a = " << a << ", b = " << b << ")";
        throw DomainError(os.str());
      }
      const double term = coef * xpow / denom;
      sum.add(term);
      if (n > -a + 2 && std::abs(term) <= 1e-17 * std::abs(sum.value())) return sum.value();
    } else {
      return sum.value();
    }
    coef *= (n + 1.0 - b) / (n + 1.0);
    xpow *= x;
  }
  throw AccuracyError("incomplete_beta: series did not converge", sum.value(), kInf);
}

double compensated_sum(std::span<const double> xs) {
  NeumaierSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// A piece of the original interval mapped from u in [0,1].
struct Piece {
  std::function<double(double)> x_of_u;
  std::function<double(double)> jac;
};

struct Segment {
  int piece;
  double lo, hi;
  double value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

class Integrator {
 public:
  Integrator(const std::function<double(double)>& f, std::vector<Piece> pieces)
      : f_(f), pieces_(std::move(pieces)) {}

  Segment rule(int piece, double lo, double hi) {
    const Piece& p = pieces_[piece];
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    auto g = [&](double u) {
      const double x = p.x_of_u(u);
      const double j = p.jac(u);
      if (j == 0.0) return 0.0;
      const double v = f_(x) * j;
      ++evals_;
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "integrate: non-finite integrand at x = " << x;
        throw DomainError(os.str());
      }
      return v;
    };
    const double fc = g(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
      const double dx = h * kXgk[j];
      const double f1 = g(c - dx);
      const double f2 = g(c + dx);
      resk += kWgk[j] * (f1 + f2);
      if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    resk *= h;
    resg *= h;
    return {piece, lo, hi, resk, std::abs(resk - resg)};
  }

  QuadratureResult run(const QuadratureSpec& spec) {
    std::vector<Segment> heap;
    NeumaierSum frozen_value;
    double frozen_error = 0.0;
    for (int i = 0; i < static_cast<int>(pieces_.size()); ++i) heap.push_back(rule(i, 0.0, 1.0));
    std::make_heap(heap.begin(), heap.end());
    int subdivisions = 0;
    double value = 0.0, err = 0.0;
    auto resum = [&] {
      NeumaierSum v = frozen_value;
      err = frozen_error;
      for (const Segment& s : heap) {
        v.add(s.value);
        err += s.error;
      }
      value = v.value();
    };
    resum();
    for (;;) {
      const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(value));
      if (err <= tol || heap.empty()) {
        resum();
        if (err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(value)) || heap.empty()) {
          if (heap.empty() && err > 10.0 * tol)
            throw AccuracyError("integrate: round-off limited, tolerance not reached", value, err);
          return {value, err, evals_, subdivisions};
        }
      }
      if (subdivisions >= spec.max_subdivisions)
        throw AccuracyError("integrate: subdivision budget exhausted", value, err);
      std::pop_heap(heap.begin(), heap.end());
      const Segment s = heap.back();
      heap.pop_back();
      const double mid = 0.5 * (s.lo + s.hi);
      if (!(mid > s.lo && mid < s.hi) || (s.hi - s.lo) < 1e-14 * std::max(1.0, std::abs(mid))) {
        frozen_value.add(s.value);
        frozen_error += s.error;
        continue;
      }
      const Segment left = rule(s.piece, s.lo, mid);
      const Segment right = rule(s.piece, mid, s.hi);
      value += left.value + right.value - s.value;
      err += left.error + right.error - s.error;
      heap.push_back(left);
      std::push_heap(heap.begin(), heap.end());
      heap.push_back(right);
      std::push_heap(heap.begin(), heap.end());
      ++subdivisions;
      if (subdivisions % 128 == 0) resum();
    }
  }

 private:
  const std::function<double(double)>& f_;
  std::vector<Piece> pieces_;
  long evals_ = 0;
};

// [c, d] with an optional power singularity at the left end (dir=+1) or right end (dir=-1).
Piece finite_piece(double c, double d, Endpoint e, int dir) {
  const double len = d - c;
  if (e.kind == Endpoint::Kind::power) {
    if (!(e.exponent > -1.0)) throw DomainError("integrate: endpoint power exponent must exceed -1");
    const double k = 1.0 / (1.0 + e.exponent);
    if (dir > 0)
      return {[=](double u) { return c + len * std::pow(u, k); },
              [=](double u) { return len * k * std::pow(u, k - 1.0); }};
    return {[=](double u) { return d - len * std::pow(u, k); },
            [=](double u) { return len * k * std::pow(u, k - 1.0); }};
  }
  return {[=](double u) { return c + len * u; }, [=](double) { return len; }};
}

// Half line starting at c, going in direction dir (+1 to +inf, -1 to -inf).
Piece tail_piece(double c, Endpoint e, int dir) {
  switch (e.kind) {
    case Endpoint::Kind::power: {
      const double s = -1.0 - e.exponent;
      if (!(s > 0.0)) throw DomainError("integrate: tail power exponent must be < -1");
      // scaled by |c| so that f ~ (c + x)^p keeps its knee at v ~ 2^{-s}, not at v ~ c^{-s}
      const double scale = std::max(1.0, std::abs(c));
      return {[=](double v) { return c + dir * scale * (std::pow(v, -1.0 / s) - 1.0); },
              [=](double v) { return scale * std::pow(v, -1.0 / s - 1.0) / s; }};
    }
    case Endpoint::Kind::exp_decay: {
      const double r = e.exponent;
      if (!(r > 0.0)) throw DomainError("integrate: exponential decay rate must be positive");
      return {[=](double v) { return c - dir * std::log(v) / r; },
              [=](double v) { return 1.0 / (r * v); }};
    }
    case Endpoint::Kind::regular:
    default:
      return {[=](double t) { return c + dir * t / (1.0 - t); },
              [=](double t) { return t >= 1.0 ? 0.0 : 1.0 / ((1.0 - t) * (1.0 - t)); }};
  }
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureSpec& spec, Endpoint lo, Endpoint hi) {
  if (!(spec.abs_tol > 0.0 && spec.rel_tol > 0.0 && spec.max_subdivisions >= 1))
    throw DomainError("integrate: invalid QuadratureSpec");
  if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate: NaN bound");
  if (a == b) return {};
  if (a > b) {
    QuadratureResult r = integrate(f, b, a, spec, hi, lo);
    r.value = -r.value;
    return r;
  }
  std::vector<Piece> pieces;
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (lo_inf && hi_inf) {
    pieces.push_back(tail_piece(0.0, lo, -1));
    pieces.push_back(tail_piece(0.0, hi, +1));
  } else if (hi_inf) {
    if (lo.kind == Endpoint::Kind::power) {
      pieces.push_back(finite_piece(a, a + 1.0, lo, +1));
      pieces.push_back(tail_piece(a + 1.0, hi, +1));
    } else {
      pieces.push_back(tail_piece(a, hi, +1));
    }
  } else if (lo_inf) {
    if (hi.kind == Endpoint::Kind::power) {
      pieces.push_back(finite_piece(b - 1.0, b, hi, -1));
      pieces.push_back(tail_piece(b - 1.0, lo, -1));
    } else {
      pieces.push_back(tail_piece(b, lo, -1));
    }
  } else if (lo.kind == Endpoint::Kind::power && hi.kind == Endpoint::Kind::power) {
    const double m = 0.5 * (a + b);
    pieces.push_back(finite_piece(a, m, lo, +1));
    pieces.push_back(finite_piece(m, b, hi, -1));
  } else if (hi.kind == Endpoint::Kind::power) {
    pieces.push_back(finite_piece(a, b, hi, -1));
  } else {
    pieces.push_back(finite_piece(a, b, lo, +1));
  }
  Integrator integrator(f, std::move(pieces));
  return integrator.run(spec);
}

double tail_sum(const std::function<double(double)>& g, long k0, long k_switch, double tail_power,
                const QuadratureSpec& spec) {
  NeumaierSum s;
  const long k_direct_end = std::max(k0, k_switch);
  for (long k = k0; k < k_direct_end; ++k) s.add(g(static_cast<double>(k)));
  const double K = static_cast<double>(k_direct_end);
  const double h = std::max(1e-2, 1e-3 * K);
  const double deriv = (g(K + h) - g(K - h)) / (2.0 * h);
  const QuadratureResult tail =
      integrate(g, K, kInf, spec, Endpoint::regular(), Endpoint::power(tail_power));
  s.add(tail.value);
  s.add(0.5 * g(K));
  s.add(-deriv / 12.0);
  return s.value();
}

}  // namespace gfpeel
