#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>

namespace gfpeel {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ln|Gamma(x)| together with the sign of Gamma(x).
struct LogGamma {
  double value = 0.0;
  int sign = 1;
};

// libm lgamma with reflection below 1/2.
// Throws DomainError at the poles 0, -1, -2, ...
LogGamma log_gamma(double x);

// Signed Gamma(x); overflows to +-inf above ~171.6.
double gamma_fn(double x);

// Gamma(a)/Gamma(b) evaluated through log_gamma. 1/Gamma(pole) is treated as 0,
// so a pole in b yields 0; a pole in a throws.
double gamma_ratio(double a, double b);

// sin(pi x) and cos(pi x) with exact zeros at integers / half-integers.
double sin_pi(double x);
double cos_pi(double x);

// Lower incomplete beta B_x(a,b) = int_0^x t^{a-1}(1-t)^{b-1} dt, analytically
// continued to negative non-integer a through the hypergeometric series.
double incomplete_beta(double a, double b, double x);

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_subdivisions = 1 << 16;
};

// Behaviour of the integrand at one end of the interval.
//  power(p) at a finite end c:  f(x) ~ |x - c|^p, p > -1
//  power(p) at an infinite end: f(x) ~ |x|^p,     p < -1
//  exp_decay(r) at an infinite end: f(x) ~ exp(-r|x|), r > 0
struct Endpoint {
  enum class Kind { regular, power, exp_decay };
  Kind kind = Kind::regular;
  double exponent = 0.0;

  static Endpoint regular() { return {}; }
  static Endpoint power(double p) { return {Kind::power, p}; }
  static Endpoint exp_decay(double rate) { return {Kind::exp_decay, rate}; }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  long evaluations = 0;
  int subdivisions = 0;
};

// Adaptive Gauss-Kronrod (7/15) with global bisection. Infinite ends and
// declared endpoint singularities are removed by a change of variables first.
// Throws AccuracyError (with the partial estimate) when the subdivision budget
// runs out.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureSpec& spec = {}, Endpoint lo = {}, Endpoint hi = {});

// Compensated (Neumaier) running sum.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

// Sum_{k >= k0} g(k) for a smooth, eventually monotone g, by direct summation up
// to k_switch and Euler-Maclaurin (integral + g/2 - g'/12) beyond it. `tail_power`
// is the exponent p in g(x) ~ x^p used for the tail quadrature.
double tail_sum(const std::function<double(double)>& g, long k0, long k_switch, double tail_power,
                const QuadratureSpec& spec = {});

}  // namespace gfpeel
