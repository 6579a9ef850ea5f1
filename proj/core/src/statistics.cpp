#include "gfpeel/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"
#include "gfpeel/random.hpp"

namespace gfpeel {

WeightedSample::WeightedSample(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("WeightedSample: non-finite value");
  weights_.assign(values_.size(), values_.empty() ? 0.0 : 1.0 / static_cast<double>(values_.size()));
}

WeightedSample::WeightedSample(std::vector<double> values, std::vector<double> weights)
    : values_(std::move(values)), weights_(std::move(weights)), uniform_(false) {
  if (values_.size() != weights_.size()) throw DomainError("WeightedSample: values and weights differ in length");
  NeumaierSum total;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw DomainError("WeightedSample: non-finite value");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
      throw DomainError("WeightedSample: weights must be finite and nonnegative");
    total.add(weights_[i]);
  }
  if (!values_.empty() && !(total.value() > 0.0)) throw DomainError("WeightedSample: all weights vanish");
  for (double& w : weights_) w /= total.value();
}

double WeightedSample::mean() const {
  if (empty()) throw DomainError("WeightedSample::mean: empty sample");
  NeumaierSum s;
  for (std::size_t i = 0; i < size(); ++i) s.add(weights_[i] * values_[i]);
  return s.value();
}

double WeightedSample::mean_se() const {
  if (size() < 2) return 0.0;
  const double m = mean();
  NeumaierSum s;
  for (std::size_t i = 0; i < size(); ++i) {
    const double d = weights_[i] * (values_[i] - m);
    s.add(d * d);
  }
  // n/(n-1) keeps the equal-weight case identical to the usual standard error.
  const double n = static_cast<double>(size());
  return std::sqrt(s.value() * n / (n - 1.0));
}

double WeightedSample::effective_size() const {
  double s2 = 0.0;
  for (double w : weights_) s2 += w * w;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

double WeightedSample::cdf(double x) const {
  NeumaierSum s;
  for (std::size_t i = 0; i < size(); ++i)
    if (values_[i] <= x) s.add(weights_[i]);
  return std::min(1.0, s.value());
}

double WeightedSample::quantile(double p) const {
  if (empty()) throw DomainError("WeightedSample::quantile: empty sample");
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += weights_[i];
    if (acc >= p) return values_[i];
  }
  return values_[order.back()];
}

namespace {

struct Pooled {
  std::vector<double> values;  // ascending
  std::vector<double> raw;     // weights scaled to mean 1 within their own sample
  std::vector<char> in_a;
};

Pooled pool(const WeightedSample& a, const WeightedSample& b) {
  if (a.empty() || b.empty()) throw DomainError("weighted_ks: empty sample");
  const std::size_t n = a.size() + b.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto value = [&](std::size_t i) { return i < a.size() ? a.values()[i] : b.values()[i - a.size()]; };
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return value(x) < value(y); });
  Pooled p;
  p.values.reserve(n);
  p.raw.reserve(n);
  p.in_a.reserve(n);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  for (std::size_t i : order) {
    p.values.push_back(value(i));
    if (i < a.size()) {
      p.raw.push_back(a.weights()[i] * na);
      p.in_a.push_back(1);
    } else {
      p.raw.push_back(b.weights()[i - a.size()] * nb);
      p.in_a.push_back(0);
    }
  }
  return p;
}

double sweep(const Pooled& p, const std::vector<char>& in_a) {
  double wa = 0.0;
  double wb = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) (in_a[i] ? wa : wb) += p.raw[i];
  if (!(wa > 0.0) || !(wb > 0.0)) return 0.0;
  double fa = 0.0;
  double fb = 0.0;
  double d = 0.0;
  const std::size_t n = p.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    (in_a[i] ? fa : fb) += p.raw[i];
    if (i + 1 < n && p.values[i + 1] == p.values[i]) continue;  // ties enter together
    d = std::max(d, std::abs(fa / wa - fb / wb));
  }
  return d;
}

}  // namespace

double weighted_ks(const WeightedSample& a, const WeightedSample& b) {
  const Pooled p = pool(a, b);
  return sweep(p, p.in_a);
}

KsTest ks_permutation_test(const WeightedSample& a, const WeightedSample& b, int permutations,
                           std::uint64_t seed) {
  if (permutations < 1) throw DomainError("ks_permutation_test: need at least one permutation");
  const Pooled p = pool(a, b);
  KsTest out;
  out.statistic = sweep(p, p.in_a);
  out.permutations = permutations;
  Rng rng = replicate_rng(seed, 0);
  std::vector<char> labels = p.in_a;
  long exceed = 0;
  for (int r = 0; r < permutations; ++r) {
    std::shuffle(labels.begin(), labels.end(), rng);
    if (sweep(p, labels) >= out.statistic * (1.0 - 1e-12)) ++exceed;
  }
  out.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + permutations);
  return out;
}

double hill_estimator(std::span<const double> xs, std::size_t k) {
  if (k < 2 || k >= xs.size()) throw DomainError("hill_estimator: need 2 <= k < n");
  std::vector<double> v(xs.begin(), xs.end());
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end(), std::greater<>());
  const double threshold = v[k];
  if (!(threshold > 0.0)) throw DomainError("hill_estimator: threshold order statistic is not positive");
  NeumaierSum s;
  for (std::size_t i = 0; i < k; ++i) s.add(std::log(v[i] / threshold));
  return static_cast<double>(k) / s.value();
}

double survival_tail_slope(std::span<const double> xs, double lo, double hi) {
  if (!(0.0 < lo && lo < hi && hi <= 1.0)) throw DomainError("survival_tail_slope: need 0 < lo < hi <= 1");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  const double n = static_cast<double>(v.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  long m = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double surv = static_cast<double>(i + 1) / n;
    if (surv < lo || surv > hi || !(v[i] > 0.0)) continue;
    const double x = std::log(v[i]);
    const double y = std::log(surv);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 3) throw DomainError("survival_tail_slope: fewer than three points in the survival window");
  const double md = static_cast<double>(m);
  const double den = sxx - sx * sx / md;
  if (!(den > 0.0)) throw DomainError("survival_tail_slope: degenerate window");
  return (sxy - sx * sy / md) / den;
}

McEstimate mean_estimate(std::span<const double> xs) {
  McEstimate e;
  e.n = static_cast<long>(xs.size());
  if (xs.empty()) return e;
  double mean = 0.0;
  double m2 = 0.0;
  long k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  e.mean = mean;
  e.se = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  return e;
}

}  // namespace gfpeel
