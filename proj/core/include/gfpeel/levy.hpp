#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gfpeel/numerics.hpp"

namespace gfpeel {

struct Atom {
  double position = 0.0;
  double mass = 0.0;
};

// Lévy measure = density part + atoms. The density is stored in factored form
//   density(y) = |y|^p * reduced(y),   p = small_jump_exponent,
// so that integrals near the origin can be computed without overflow.
struct LevyMeasure {
  std::function<double(double)> reduced;
  double small_jump_exponent = 0.0;
  double lower = -kInf;  // support of the density part
  double upper = kInf;
  // Exponential decay rates of the density at infinite support ends.
  double lower_tail_rate = kInf;
  double upper_tail_rate = kInf;
  std::vector<Atom> atoms;
  // JSON text describing how to rebuild this measure (empty if not serializable).
  std::string descriptor;

  bool has_density() const { return static_cast<bool>(reduced); }
  double density(double y) const;
};

LevyMeasure zero_measure();
LevyMeasure atomic_measure(std::vector<Atom> atoms);

// Which compensator the exponent uses:
//   exponential: e^{qy} - 1 + q(1 - e^y)        (needs int_{y>1} e^y dLambda < inf)
//   truncated:   e^{qy} - 1 - q y 1_{|y|<1}
enum class Compensation { exponential, truncated };

struct LevyCharacteristics {
  double sigma2 = 0.0;
  double b = 0.0;
  double killing = 0.0;
  double alpha = 0.0;
  LevyMeasure measure = zero_measure();
  Compensation compensation = Compensation::exponential;
};

// Throws DomainError if sigma2/killing are negative or the measure fails
// int (1 ^ y^2) dLambda < inf (and int_{y>1} e^y dLambda < inf for the
// exponential compensator).
void validate(const LevyCharacteristics& chars);

// Integrand g(y) = |y|^s * r(y) for integration against a Lévy measure.
// growth_upper/growth_lower: g(y) ~ exp(growth * |y|) at +-infinity.
struct MeasureIntegrand {
  std::function<double(double)> r;
  double s = 0.0;
  double growth_upper = 0.0;
  double growth_lower = 0.0;
};

// int g dLambda over (lo, hi), atoms included. Returns +inf when a tail diverges.
double integrate_measure(const LevyMeasure& m, const MeasureIntegrand& g, double lo = -kInf,
                         double hi = kInf, const QuadratureSpec& spec = {});

// Building blocks shared by the exponent integrals.
double compensator(Compensation c, double q, double y);          // e^{qy}-1+q(1-e^y) or truncated
double compensator_reduced(Compensation c, double q, double y);  // divided by y^2

double psi_eval(const LevyCharacteristics& chars, double q, const QuadratureSpec& spec = {});
double kappa_eval(const LevyCharacteristics& chars, double q, const QuadratureSpec& spec = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CumulantFunction {
  LevyCharacteristics chars;
  std::function<double(double)> kappa;  // kappa_eval or a closed form
  Interval domain;                      // open interval where kappa is finite
  std::optional<double> omega_minus;
  std::optional<double> omega_plus;

  double operator()(double q) const { return kappa(q); }
};

CumulantFunction make_cumulant(LevyCharacteristics chars, Interval domain);
// kappa_theta in closed form attached to its driving characteristics, roots filled in.
CumulantFunction stable_cumulant(double theta);

struct RootPair {
  std::optional<double> omega_minus;
  std::optional<double> omega_plus;
};

// Sign scan on 256 points of `search`, then bisection and a Newton polish.
RootPair find_roots(const CumulantFunction& kappa, Interval search);

// e^{omega x}(Lambda + tilde Lambda)(dx), tilde Lambda the image of Lambda on (-inf,0)
// under y -> ln(1 - e^y).
LevyMeasure shifted_measure(const LevyMeasure& base, double omega);

// Characteristics of q -> kappa(omega + q) (truncated compensator, killing -kappa(omega)).
LevyCharacteristics shift_exponent(const CumulantFunction& kappa, double omega,
                                   const QuadratureSpec& spec = {});

struct StableFamilyParams {
  double theta = 1.0;
  double rho = 0.5;
  double gamma_hyp = 0.5;
  double gammahat_hyp = 0.5;
  double omega_minus = 1.5;
  double omega_plus = 2.5;
};
StableFamilyParams stable_params(double theta);

// cos(pi(q-theta)) Gamma(q-theta) Gamma(1+2theta-q) / pi on theta < q < 2theta+1.
double kappa_theta(double theta, double q);
// Literal quotient form; NaN at the removable point q = 2 theta. Test oracle only.
double kappa_theta_quotient(double theta, double q);

enum class DriftBranch { direct, two_sided_limit };

struct StableCharacteristics {
  LevyCharacteristics chars;
  DriftBranch drift_branch = DriftBranch::direct;
};

StableCharacteristics stable_family_characteristics(double theta);
LevyMeasure stable_theta_measure(double theta);
double stable_theta_drift(double theta, DriftBranch* branch = nullptr);

// 15 f(4) - 6 f(5) - 10 f(3) with f built from the negative half of the measure.
double killing_identity(const LevyCharacteristics& chars, const QuadratureSpec& spec = {});

// w >= 0 making x^{-w} nu(dx) on (0,1) symmetric about 1/2, nu the image of
// Lambda under exp; nullopt if none exists.
std::optional<double> symmetry_exponent(const LevyMeasure& measure);

// max_z |kappa_theta(theta, omega_+ + z) - hypergeometric Phi^+(z)| over a grid of (0, theta-1/2).
double hypergeometric_match(double theta, int grid_points = 50);
double hypergeometric_phi_plus(double theta, double z);

// Both sides of the spectrally negative (theta = 3/2) integral identity:
//   Gamma(q-3/2)/Gamma(q-3)
//     = -2q/sqrt(pi) + 3/(4 sqrt(pi)) int_{1/2}^1 (x^q - 1 + q(1-x) + (1-x)^q)(x(1-x))^{-5/2} dx
struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};
IdentitySides three_halves_identity(double q, const QuadratureSpec& spec = {});

}  // namespace gfpeel
