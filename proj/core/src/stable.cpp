#include "gfpeel/stable.hpp"

#include <cmath>

#include "gfpeel/errors.hpp"
#include "gfpeel/numerics.hpp"

namespace gfpeel {

double sample_positive_stable(double beta, Rng& rng) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("sample_positive_stable: beta must lie in (0,1)");
  // CMS with skewness 1 and alpha < 1 reduces to Kanter's form:
  //   S = (A(U)/E)^{(1-beta)/beta},  A(u) = sin(beta u)^{beta/(1-beta)} sin((1-beta)u) / sin(u)^{1/(1-beta)},
  // U uniform on (0, pi), E standard exponential; E exp(-lambda S) = exp(-lambda^beta).
  const double u = kPi * uniform_open(rng);
  const double e = -std::log(uniform_open(rng));
  const double r = 1.0 - beta;
  const double log_a = beta / r * std::log(std::sin(beta * u)) + std::log(std::sin(r * u)) -
                       std::log(std::sin(u)) / r;
  const double s = std::exp(r / beta * (log_a - std::log(e)));
  return gamma_fn(1.0 + 1.0 / beta) * s;
}

WeightedSample inverse_size_biased_law(double beta, std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("inverse_size_biased_law: n must be >= 1");
  std::vector<double> values(n);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = sample_positive_stable(beta, rng);
    weights[i] = 1.0 / values[i];
  }
  return WeightedSample(std::move(values), std::move(weights));
}

}  // namespace gfpeel
