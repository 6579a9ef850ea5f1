#pragma once

#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace gfpeel {

using BigRational = boost::multiprecision::cpp_rational;

// Face weights q_k, stored in reduced form q_k gamma^{1-k} so that large degrees
// neither underflow nor overflow.
struct WeightSequence {
  double theta = 1.25;
  double c = 1.0;
  double gamma = 0.25;
  std::function<double(long)> q_reduced;  // k >= 1
  bool is_explicit_family = false;

  double q(long k) const;

  // q_k = c gamma^{k-1} Gamma(k - theta - 1/2)/Gamma(k + 1/2) 1_{k >= 2},
  // gamma = 1/(4 theta + 2), c = -sqrt(pi)/(2 Gamma(1/2 - theta)).
  static WeightSequence explicit_family(double theta);
};

// 4^{-l} binom(2l, l) and its partial sums (h_up(l) = 0 for l <= 0).
BigRational h_down_exact(long l);
BigRational h_up_exact(long l);
// Real versions, also for non-integer arguments (quadrature of tails).
double h_down(double l);
double h_up(double l);

// a x^{-p} (1 + b1/x + b2/x^2) for x -> infinity.
struct PowerTail {
  double amplitude = 0.0;
  double exponent = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double operator()(double x) const;
};

enum class NuMethod { harmonicity, tutte, closed_form };
std::string to_string(NuMethod m);
NuMethod nu_method_from_string(const std::string& s);

// Step law of the perimeter walk, tabulated on [-k_max, k_max] and continued
// by fitted power tails beyond. Immutable; share across threads.
class NuTable {
 public:
  double operator()(long k) const;
  // Tail continuation for |x| > k_max (real argument, used in tail quadrature).
  double tail(double x) const;

  long k_max() const { return k_max_; }
  NuMethod method() const { return method_; }
  const WeightSequence& weights() const { return ws_; }
  double theta() const { return ws_.theta; }
  double gamma() const { return ws_.gamma; }
  const PowerTail& pos_tail() const { return pos_tail_; }
  const PowerTail& neg_tail() const { return neg_tail_; }

  // Sums with tail completion.
  double total_mass() const;
  double mean() const;  // NaN for theta <= 1 (no first moment)
  // sum_k nu(k) h_up(l+k) - h_up(l)
  double harmonicity_residual(long l) const;

  // Sum_{k > k0} g(k) nu(k) for a smooth g, exact up to k_max and by quadrature beyond.
  double positive_sum(long k0, const std::function<double(double)>& g, double g_power) const;

 private:
  friend NuTable build_nu(const WeightSequence&, long, NuMethod);
  WeightSequence ws_;
  long k_max_ = 0;
  NuMethod method_ = NuMethod::harmonicity;
  std::vector<double> pos_;  // nu(0..k_max)
  std::vector<double> neg_;  // neg_[j] = nu(-j), j = 0..k_max (neg_[0] unused)
  PowerTail pos_tail_;
  PowerTail neg_tail_;
};

// harmonicity: solves the h-harmonicity equations one unknown at a time, in
//   the differenced (h_down) form for numerical stability;
// tutte: damped fixed-point sweeps, then Newton, on the one-step peeling
//   consistency for l <= min(k_max - 1, 1000) with the asymptotic tail of W beyond;
// closed_form: nu(k) = c Gamma(k + 1/2 - theta)/Gamma(k + 3/2), k != 0 (explicit family only).
// Throws AccuracyError with the residual when a method does not converge.
NuTable build_nu(const WeightSequence& ws, long k_max = 100000,
                 NuMethod method = NuMethod::harmonicity);

// W^(l) and the overflow-free gamma^l W^(l) = nu(-1-l)/(2 gamma).
double w_partition(const NuTable& nu, long l);
double scaled_w_partition(const NuTable& nu, long l);
// c gamma^{-l-1} l^{-theta-1}/(2 cos((theta+1) pi)), in the same gamma^l scaling.
double scaled_w_asymptotic(const WeightSequence& ws, long l);

// h_up(l)/(W^(l) gamma^l) and h_down(l)/(W^(l) gamma^l) (= expected vertex count).
double f_up(const NuTable& nu, long l);
double f_down(const NuTable& nu, long l);

}  // namespace gfpeel
