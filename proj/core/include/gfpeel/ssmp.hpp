#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "gfpeel/levy.hpp"
#include "gfpeel/random.hpp"

namespace gfpeel {

struct Jump {
  double time = 0.0;
  double size = 0.0;
};

// Compound-Poisson part (|y| >= eps and all atoms) plus Gaussian substitute for
// the small jumps of a Lévy measure. Immutable after construction; share freely.
class LevySampler {
 public:
  LevySampler(const LevyCharacteristics& chars, double trunc_epsilon);

  double trunc_epsilon() const { return eps_; }
  double jump_rate() const { return rate_; }
  double killing() const { return killing_; }
  // xi = drift*t + sqrt(variance)*B_t + big jumps, killed at rate killing().
  double drift() const { return drift_; }
  double variance() const { return variance_; }
  // Mass of Lambda dropped beyond the tabulated range (relative to jump_rate).
  double tail_cut_mass() const { return tail_cut_; }

  double sample_jump(Rng& rng) const;
  // log E exp(q * continuous part over unit time)
  double gaussian_exponent(double q) const { return drift_ * q + 0.5 * variance_ * q * q; }

 private:
  struct Cell {
    double lo = 0.0;
    double hi = 0.0;      // lo == hi for atoms
    double envelope = 0.0;
  };
  double eps_;
  double rate_ = 0.0;
  double killing_ = 0.0;
  double drift_ = 0.0;
  double variance_ = 0.0;
  double tail_cut_ = 0.0;
  LevyMeasure measure_;
  std::vector<Cell> cells_;
  std::vector<double> cdf_;  // cumulative normalized cell masses
};

enum class PathEnd { killed, horizon, floor, ceiling, clock };

struct LevyPath {
  // Knots: grid points and jump times. values[i] is xi(times[i]) after any jump there.
  std::vector<double> grid_times;
  std::vector<double> values;
  std::vector<Jump> jumps;
  std::optional<double> killed_at;
  double trunc_epsilon = 0.0;
  double horizon = 0.0;  // last simulated time
  PathEnd end = PathEnd::horizon;
};

// Stops a path early in xi-time. The real-time cap uses the Lamperti clock
// t(r) = x0^{-alpha} int_0^r exp(-alpha xi).
struct PathControl {
  double horizon = 1.0;
  double dt = 1e-3;
  double xi_floor = -kInf;
  double xi_ceiling = kInf;
  double clock_x0 = 1.0;
  double clock_alpha = 0.0;
  double clock_max = kInf;
  long max_jumps = 1'000'000'000;
};

LevyPath sample_levy_path(const LevyCharacteristics& chars, double horizon, double trunc_epsilon,
                          double dt, Rng& rng);
LevyPath sample_levy_path(const LevySampler& sampler, const PathControl& control, Rng& rng);

struct PssmpPath {
  double start = 1.0;
  double alpha = 0.0;
  std::vector<double> times;
  std::vector<double> values;       // X(t) at the knots
  std::vector<double> left_values;  // X(t-) at the knots
  std::vector<Jump> neg_jumps;  // (time, X(t-) - X(t))
  double lifetime = kInf;       // meaningful only when !censored
  bool censored = false;
  PathEnd end = PathEnd::horizon;

  // X(t); 0 at or after the lifetime; nullopt past the simulated range of a censored path.
  std::optional<double> value_at(double t) const;
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

// Lamperti time change of a stored xi path. Jump sizes are unchanged.
PssmpPath lamperti_transform(const LevyPath& path, double x0, double alpha);

std::vector<Jump> negative_jumps(const PssmpPath& path);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error
  long n = 0;
};

// Monte Carlo estimate of E_x int_0^zeta X^{q+alpha} dt = x^q E int_0^inf e^{q xi}.
// Each replicate stops once e^{q xi} < 1e-8 and adds the exact conditional
// remainder e^{q xi}/(-Psi(q)).
McEstimate mellin_check(const LevyCharacteristics& chars, double q, double x, long n_rep,
                        std::uint64_t seed, double trunc_epsilon = 1e-3, double dt = 1e-3);

// Columns t, X_t, is_jump, jump_size.
void write_path_csv(std::ostream& os, const PssmpPath& path);

}  // namespace gfpeel
