#include "gfpeel/nu_table.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"

namespace gfpeel {

namespace {

constexpr int kSmallH = 256;

// h_down on 0..kSmallH-1 by the exact product recursion in long double.
const std::array<double, kSmallH>& small_h_down() {
  static const std::array<double, kSmallH> table = [] {
    std::array<double, kSmallH> t{};
    long double v = 1.0L;
    for (int m = 0; m < kSmallH; ++m) {
      t[m] = static_cast<double>(v);
      v *= static_cast<long double>(2 * m + 1) / static_cast<long double>(2 * m + 2);
    }
    return t;
  }();
  return table;
}

// Dot product in blocks of 64: eight interleaved accumulators inside a block,
// compensated summation across blocks. Plain accumulation over 10^5 terms
// loses ~1e-15 absolute, which the perimeter recursion cannot afford.
double dot(const double* a, const double* b, long n) {
  NeumaierSum total;
  long i = 0;
  for (; i + 64 <= n; i += 64) {
    double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (long j = i; j < i + 64; j += 8)
      for (int r = 0; r < 8; ++r) s[r] += a[j + r] * b[j + r];
    total.add(((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7])));
  }
  for (; i < n; ++i) total.add(a[i] * b[i]);
  return total.value();
}

PowerTail fit_tail(double p, const std::array<double, 3>& x, const std::array<double, 3>& y) {
  Eigen::Matrix3d a;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = 1.0 / x[i];
    a(i, 2) = 1.0 / (x[i] * x[i]);
    rhs(i) = y[i] * std::pow(x[i], p);
  }
  const Eigen::Vector3d sol = a.fullPivLu().solve(rhs);
  PowerTail t;
  t.exponent = p;
  t.amplitude = sol(0);
  if (sol(0) != 0.0) {
    t.b1 = sol(1) / sol(0);
    t.b2 = sol(2) / sol(0);
  }
  return t;
}

PowerTail fit_from_table(double p, const std::vector<double>& v, long k_max) {
  const long k1 = k_max;
  const long k2 = (3 * k_max) / 4;
  const long k3 = k_max / 2;
  return fit_tail(p, {double(k1), double(k2), double(k3)}, {v[k1], v[k2], v[k3]});
}

double tail_sum_from(long k0, const std::function<double(double)>& g, double power) {
  QuadratureSpec spec;
  spec.abs_tol = 1e-300;
  spec.rel_tol = 1e-10;
  return tail_sum(g, k0, k0, power, spec);
}

}  // namespace

double WeightSequence::q(long k) const {
  if (k < 1) throw DomainError("WeightSequence::q: k must be >= 1");
  return q_reduced(k) * std::pow(gamma, static_cast<double>(k - 1));
}

WeightSequence WeightSequence::explicit_family(double theta) {
  if (!(theta > 0.5 && theta < 1.5))
    throw DomainError("WeightSequence::explicit_family: theta must lie in (1/2, 3/2)");
  WeightSequence ws;
  ws.theta = theta;
  ws.gamma = 1.0 / (4.0 * theta + 2.0);
  ws.c = -std::sqrt(kPi) / (2.0 * gamma_fn(0.5 - theta));
  ws.is_explicit_family = true;
  const double c = ws.c;
  ws.q_reduced = [c, theta](long k) {
    if (k < 2) return 0.0;
    const double x = static_cast<double>(k);
    return c * gamma_ratio(x - theta - 0.5, x + 0.5);
  };
  return ws;
}

BigRational h_down_exact(long l) {
  if (l < 0) return BigRational(0);
  boost::multiprecision::cpp_int num = 1;
  boost::multiprecision::cpp_int den = 1;
  for (long m = 0; m < l; ++m) {
    num *= 2 * m + 1;
    den *= 2 * m + 2;
  }
  return BigRational(num, den);
}

BigRational h_up_exact(long l) {
  if (l <= 0) return BigRational(0);
  return BigRational(2 * l) * h_down_exact(l);
}

double h_down(double l) {
  if (l < 0.0) return 0.0;
  if (l < kSmallH && l == std::floor(l)) return small_h_down()[static_cast<int>(l)];
  if (l < 200.0) return std::exp(log_gamma(l + 0.5).value - log_gamma(l + 1.0).value) / std::sqrt(kPi);
  // Gamma(l+1/2)/Gamma(l+1) = l^{-1/2} (1 - 1/(8l) + 1/(128l^2) + 5/(1024l^3) - 21/(32768l^4) ...)
  const double u = 1.0 / l;
  const double series =
      1.0 + u * (-1.0 / 8 + u * (1.0 / 128 + u * (5.0 / 1024 + u * (-21.0 / 32768 +
                                                                      u * (-399.0 / 262144 + u * 869.0 / 4194304)))));
  return series / std::sqrt(kPi * l);
}

double h_up(double l) {
  if (l <= 0.0) return 0.0;
  return 2.0 * l * h_down(l);
}

double PowerTail::operator()(double x) const {
  return amplitude * std::pow(x, -exponent) * (1.0 + b1 / x + b2 / (x * x));
}

std::string to_string(NuMethod m) {
  switch (m) {
    case NuMethod::harmonicity: return "harmonicity";
    case NuMethod::tutte: return "tutte";
    case NuMethod::closed_form: return "closed_form";
  }
  return "?";
}

NuMethod nu_method_from_string(const std::string& s) {
  if (s == "harmonicity") return NuMethod::harmonicity;
  if (s == "tutte") return NuMethod::tutte;
  if (s == "closed_form") return NuMethod::closed_form;
  throw DomainError("unknown nu method '" + s + "'");
}

double NuTable::operator()(long k) const {
  if (k >= 0) {
    if (k <= k_max_) return pos_[k];
    return ws_.q_reduced(k + 1);
  }
  const long j = -k;
  if (j <= k_max_) return neg_[j];
  return neg_tail_(static_cast<double>(j));
}

double NuTable::tail(double x) const { return x > 0.0 ? pos_tail_(x) : neg_tail_(-x); }

double NuTable::positive_sum(long k0, const std::function<double(double)>& g, double g_power) const {
  NeumaierSum s;
  for (long k = std::max(0L, k0 + 1); k <= k_max_; ++k) s.add(pos_[k] * g(static_cast<double>(k)));
  const long start = std::max(k0 + 1, k_max_ + 1);
  s.add(tail_sum_from(start, [&](double x) { return pos_tail_(x) * g(x); },
                      -pos_tail_.exponent + g_power));
  return s.value();
}

double NuTable::total_mass() const {
  NeumaierSum s;
  for (long k = 0; k <= k_max_; ++k) s.add(pos_[k]);
  for (long j = 1; j <= k_max_; ++j) s.add(neg_[j]);
  s.add(tail_sum_from(k_max_ + 1, [this](double x) { return pos_tail_(x); }, -pos_tail_.exponent));
  s.add(tail_sum_from(k_max_ + 1, [this](double x) { return neg_tail_(x); }, -neg_tail_.exponent));
  return s.value();
}

double NuTable::mean() const {
  if (!(ws_.theta > 1.0)) return std::nan("");
  NeumaierSum s;
  for (long k = 1; k <= k_max_; ++k) s.add(static_cast<double>(k) * (pos_[k] - neg_[k]));
  s.add(tail_sum_from(k_max_ + 1, [this](double x) { return x * pos_tail_(x); }, 1.0 - pos_tail_.exponent));
  s.add(-tail_sum_from(k_max_ + 1, [this](double x) { return x * neg_tail_(x); }, 1.0 - neg_tail_.exponent));
  return s.value();
}

double NuTable::harmonicity_residual(long l) const {
  if (l < 1) throw DomainError("harmonicity_residual: l must be >= 1");
  NeumaierSum s;
  for (long k = -l + 1; k < 0; ++k) s.add((*this)(k) * h_up(static_cast<double>(l + k)));
  s.add(positive_sum(-1, [l](double x) { return h_up(static_cast<double>(l) + x); }, 0.5));
  s.add(-h_up(static_cast<double>(l)));
  return s.value();
}

namespace {

void check_weights(const WeightSequence& ws) {
  if (!(ws.theta > 0.5 && ws.theta < 1.5)) throw DomainError("WeightSequence: theta must lie in (1/2, 3/2)");
  if (!(ws.gamma > 0.0) || !(ws.c > 0.0)) throw DomainError("WeightSequence: gamma and c must be positive");
  if (!ws.q_reduced) throw DomainError("WeightSequence: q is not set");
}

// First backward difference of h_down (h_down = 0 on negative integers), in the
// cancellation-free form D(n) = -h_down(n-1)/(2n).
double h_down_diff(double n) {
  if (n < 0.0) return 0.0;
  if (n == 0.0) return 1.0;
  return -h_down(n - 1.0) / (2.0 * n);
}

// Solves sum_k nu(k) h_down(l + k) = h_down(l), l >= 1, for nu(-l) in increasing l.
// For l >= 2 the equation is replaced by its difference in l: the coefficient of
// nu(-l) stays 1 and the terms drop from O(l^{-1/2}) to O(l^{-3/2}), so far less
// is lost to cancellation. Rounding errors are propagated through the inverse of
// (1-z)^{1/2} resp. 1, both with bounded coefficients; a second difference would
// propagate them with weights growing like l^{1/2}.
void solve_harmonicity(const std::vector<double>& pos, const PowerTail& tail, long k_max,
                       std::vector<double>& neg) {
  std::vector<double> dh(2 * k_max + 2);
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] = h_down_diff(static_cast<double>(i));
  // reversed copy of dh so that the convolution with nu(-1..-(l-1)) is a forward dot product
  std::vector<double> dh_rev(k_max + 1);
  for (long i = 0; i <= k_max; ++i) dh_rev[i] = dh[k_max - i];
  neg.assign(k_max + 1, 0.0);
  {
    const double plus =
        [&] {
          NeumaierSum s;
          for (long k = 0; k <= k_max; ++k) s.add(pos[k] * h_down(1.0 + k));
          s.add(tail_sum_from(k_max + 1, [&](double x) { return tail(x) * h_down(1.0 + x); },
                              -tail.exponent - 0.5));
          return s.value();
        }();
    neg[1] = h_down(1.0) - plus;
  }
  for (long l = 2; l <= k_max; ++l) {
    const double plus =
        dot(pos.data(), dh.data() + l, k_max + 1) +
        tail_sum_from(k_max + 1,
                      [&](double x) { return tail(x) * h_down_diff(static_cast<double>(l) + x); },
                      -tail.exponent - 1.5);
    const double conv = dot(neg.data() + 1, dh_rev.data() + (k_max - l + 1), l - 1);
    neg[l] = dh[l] - plus - conv;
  }
}

void solve_tutte(const WeightSequence& ws, const std::vector<double>& pos, const PowerTail& pos_tail,
                 long size, std::vector<double>& x_out) {
  const double p = ws.theta + 1.0;
  const int n = static_cast<int>(size);  // unknowns x_1..x_n, x_m = nu(-1-m)
  const double x0 = 2.0 * ws.gamma;
  const auto nu_pos = [&](long j) {
    return j <= static_cast<long>(pos.size()) - 1 ? pos[j] : ws.q_reduced(j + 1);
  };
  // Beyond n the unknowns are replaced by the asymptotic form x_i = nu(-1-i) = amp (i+1)^{-p};
  // tail[m] is the resulting constant part of sum_j nu(j) x_{m+j}.
  const double amp = ws.c / cos_pi(ws.theta + 1.0);
  std::vector<double> tail(n + 1, 0.0);
  const long direct = 20L * n;
  for (int m = 1; m <= n; ++m) {
    NeumaierSum s;
    for (long i = n + 1; i <= n + direct; ++i) s.add(nu_pos(i - m) * amp * std::pow(i + 1.0, -p));
    const double dm = m;
    s.add(tail_sum_from(n + direct + 1, [&](double i) { return pos_tail(i - dm) * amp * std::pow(i + 1.0, -p); },
                        -pos_tail.exponent - p));
    tail[m] = s.value();
  }
  Eigen::VectorXd x(n + 1);
  x(0) = x0;
  for (int m = 1; m <= n; ++m) x(m) = amp * std::pow(m + 1.0, -p);

  const auto residual = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd f(n);
    for (int m = 1; m <= n; ++m) {
      double s = 0.0;
      for (int j = 0; m + j <= n; ++j) s += nu_pos(j) * v(m + j);
      s += tail[m];
      double quad = 0.0;
      for (int k = 0; k <= m - 1; ++k) quad += v(k) * v(m - 1 - k);
      f(m - 1) = s + 0.5 * quad - v(m);
    }
    return f;
  };

  // damped fixed-point sweeps bring the asymptotic guess into Newton's basin
  Eigen::VectorXd f = residual(x);
  double norm = f.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 400 && norm > 1e-6; ++it) {
    x.tail(n) += 0.5 * f;
    f = residual(x);
    norm = f.lpNorm<Eigen::Infinity>();
  }
  for (int it = 0; it < 60 && norm > 1e-15; ++it) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int m = 1; m <= n; ++m) {
      for (int c = m; c <= n; ++c) jac(m - 1, c - 1) += nu_pos(c - m);
      for (int c = 1; c <= m - 1; ++c) jac(m - 1, c - 1) += x(m - 1 - c);
      jac(m - 1, m - 1) -= 1.0;
    }
    const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
    double lambda = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = x;
      trial.tail(n) += lambda * step;
      const Eigen::VectorXd ft = residual(trial);
      const double nt = ft.lpNorm<Eigen::Infinity>();
      if (nt < norm || ls == 29) {
        x = trial;
        f = ft;
        norm = nt;
        break;
      }
      lambda *= 0.5;
    }
  }
  if (!(norm < 1e-12)) {
    std::ostringstream os;
    os << "build_nu(tutte): Newton residual " << norm << " after 60 iterations";
    throw AccuracyError(os.str(), x(1), norm);
  }
  x_out.assign(n + 1, 0.0);
  for (int m = 0; m <= n; ++m) x_out[m] = x(m);
}

}  // namespace

NuTable build_nu(const WeightSequence& ws, long k_max, NuMethod method) {
  check_weights(ws);
  if (k_max < 64) throw DomainError("build_nu: k_max must be >= 64");
  NuTable t;
  t.ws_ = ws;
  t.k_max_ = k_max;
  t.method_ = method;
  const double p = ws.theta + 1.0;

  t.pos_.resize(k_max + 1);
  for (long k = 0; k <= k_max; ++k) t.pos_[k] = ws.q_reduced(k + 1);
  t.pos_tail_ = fit_from_table(p, t.pos_, k_max);

  switch (method) {
    case NuMethod::closed_form: {
      if (!ws.is_explicit_family)
        throw DomainError("build_nu: closed_form is only available for the explicit family");
      t.neg_.assign(k_max + 1, 0.0);
      for (long j = 1; j <= k_max; ++j)
        t.neg_[j] = ws.c * gamma_ratio(-static_cast<double>(j) + 0.5 - ws.theta,
                                       -static_cast<double>(j) + 1.5);
      break;
    }
    case NuMethod::harmonicity: {
      solve_harmonicity(t.pos_, t.pos_tail_, k_max, t.neg_);
      break;
    }
    case NuMethod::tutte: {
      const long size = std::min(k_max - 1, 1000L);
      std::vector<double> x;
      solve_tutte(ws, t.pos_, t.pos_tail_, size, x);
      t.neg_.assign(k_max + 1, 0.0);
      for (long j = 1; j <= k_max; ++j) {
        const long m = j - 1;
        t.neg_[j] = m <= size ? x[m] : ws.c / cos_pi(ws.theta + 1.0) * std::pow(m + 1.0, -p);
      }
      break;
    }
  }
  for (long j = 1; j <= k_max; ++j) {
    if (!(t.neg_[j] > 0.0)) {
      std::ostringstream os;
      os << "build_nu(" << to_string(method) << "): non-positive nu(" << -j << ") = " << t.neg_[j];
      throw AccuracyError(os.str(), t.neg_[j], std::abs(t.neg_[j]));
    }
  }
  t.neg_tail_ = fit_from_table(p, t.neg_, k_max);
  return t;
}

double scaled_w_partition(const NuTable& nu, long l) {
  if (l < 0) throw DomainError("w_partition: l must be >= 0");
  if (l + 1 > nu.k_max()) {
    std::ostringstream os;
    os << "w_partition: l = " << l << " outside the nu table (k_max = " << nu.k_max() << ")";
    throw RangeError(os.str());
  }
  return nu(-1 - l) / (2.0 * nu.gamma());
}

double w_partition(const NuTable& nu, long l) {
  const double scaled = scaled_w_partition(nu, l);
  const double v = scaled * std::pow(nu.gamma(), -static_cast<double>(l));
  if (!std::isfinite(v)) throw RangeError("w_partition: W^(l) overflows a double; use scaled_w_partition");
  return v;
}

double scaled_w_asymptotic(const WeightSequence& ws, long l) {
  const double ll = static_cast<double>(l);
  return ws.c / (2.0 * cos_pi(ws.theta + 1.0)) / ws.gamma * std::pow(ll, -ws.theta - 1.0);
}

double f_up(const NuTable& nu, long l) {
  if (l <= 0) return 0.0;
  return h_up(static_cast<double>(l)) * 2.0 * nu.gamma() / nu(-1 - l);
}

double f_down(const NuTable& nu, long l) {
  if (l < 0) throw DomainError("f_down: l must be >= 0");
  return h_down(static_cast<double>(l)) * 2.0 * nu.gamma() / nu(-1 - l);
}

}  // namespace gfpeel
