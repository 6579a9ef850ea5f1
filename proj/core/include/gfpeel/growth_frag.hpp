#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gfpeel/levy.hpp"
#include "gfpeel/random.hpp"
#include "gfpeel/ssmp.hpp"

namespace gfpeel {

// Node of the Ulam tree; the empty path is the Eve cell.
struct UlamLabel {
  std::vector<int> path;

  int generation() const { return static_cast<int>(path.size()); }
  UlamLabel child(int k) const;
  std::string str() const;  // "0" for Eve, else "1.3.2"
  auto operator<=>(const UlamLabel&) const = default;
};

struct Truncation {
  double min_birth_size = 1e-3;  // absolute size
  int max_generation = 30;
  double horizon = kInf;  // real time
};

struct SimulationOptions {
  double trunc_epsilon = 1e-2;
  double dt = 1e-2;  // xi-time grid
  // Power sums tracked by the ledger besides the roots of kappa.
  std::vector<double> extra_exponents;
  // A cell stops once X < floor_fraction * min_birth_size (all later children
  // would be pruned anyway); its remaining offspring mass enters the ledger.
  double floor_fraction = 1.0;
};

// Mass omitted from the simulated tree. For a root exponent w of kappa, adding
// the ledger to a retained power sum gives an unbiased estimate of the
// untruncated quantity (homogeneous case for time-indexed sums).
struct LedgerEntry {
  enum class Kind {
    pruned_child,      // child below min_birth_size or beyond max_generation
    floor_remainder,   // cell stopped below the floor: E[future birth mass] = X^w
    horizon_remainder  // cell alive at the horizon (genealogical sums only)
  };
  Kind kind = Kind::pruned_child;
  double time = 0.0;
  int generation = 0;  // generation of the (virtual) children
  double size = 0.0;
};

struct Cell {
  UlamLabel label;
  int parent = -1;
  double birth_time = 0.0;
  double birth_size = 0.0;
  PssmpPath path;  // local time, starts at birth_size
  // Small-jump compensator: cumulative expected birth mass of the children
  // hidden in the Gaussian part, per tracked exponent, at each path knot.
  std::vector<double> compensator;  // knots x exponents, row-major
};

struct CellSystem {
  std::vector<Cell> cells;  // parents precede children
  std::vector<LedgerEntry> ledger;
  Truncation truncation;
  LevyCharacteristics chars;
  std::optional<LevyCharacteristics> eve_override;
  std::vector<double> exponents;  // tracked exponents (roots first)
  double x0 = 1.0;

  int exponent_index(double w) const;  // throws DomainError if not tracked
  // Verifies the birth bookkeeping; throws ConsistencyError.
  void check_invariants() const;
};

class CellSystemSampler {
 public:
  CellSystemSampler(const CumulantFunction& kappa, Truncation trunc, SimulationOptions opts = {},
                    std::optional<LevyCharacteristics> eve_override = std::nullopt);

  CellSystem sample(double x0, Rng& rng) const;
  const std::vector<double>& exponents() const { return exponents_; }
  double omega_minus() const { return omega_minus_; }
  double omega_plus() const { return omega_plus_; }

 private:
  void grow(CellSystem& cs, int index, const LevySampler& sampler, Rng& rng) const;

  LevyCharacteristics chars_;
  std::optional<LevyCharacteristics> eve_;
  Truncation trunc_;
  SimulationOptions opts_;
  std::vector<double> exponents_;
  std::vector<double> small_rate_;  // int_{-eps<y<0} (1-e^y)^w dLambda per exponent
  std::vector<double> eve_small_rate_;
  double omega_minus_ = 0.0;
  double omega_plus_ = 0.0;
  std::shared_ptr<const LevySampler> sampler_;
  std::shared_ptr<const LevySampler> eve_sampler_;
};

CellSystem sample_cell_system(const CumulantFunction& kappa, double x0, const Truncation& trunc,
                              Rng& rng, const SimulationOptions& opts = {});

struct SnapshotEntry {
  double size = 0.0;
  int generation = 0;
};

struct GFSnapshot {
  std::vector<SnapshotEntry> entries;
  double time = 0.0;
  std::vector<double> exponents;
  std::vector<double> ledger;  // truncated mass per exponent (entries born <= time)
  double truncated_mass_bound = 0.0;  // ledger at the smallest tracked exponent

  void sort_descending();
};

GFSnapshot snapshot(const CellSystem& cs, double t);

struct MartingaleValue {
  double retained = 0.0;
  double ledger = 0.0;
  double total() const { return retained + ledger; }
};

// Sum over generation n+1 birth sizes^w plus the ledger for generations <= n+1.
MartingaleValue genealogical_martingale(const CellSystem& cs, int n, double omega);
MartingaleValue temporal_martingale(const GFSnapshot& snap, double omega);
// M^-(infinity) estimate: the full ledger at w_- with the retained generation-(cap+1) mass.
MartingaleValue intrinsic_area(const CellSystem& cs);

enum class SpineSign { plus, minus };

struct SpineSample {
  PssmpPath tagged;                     // Y^{+-}
  std::vector<double> marked_eta_times;  // generation increments, eta-time
  std::vector<double> marked_times;      // same, real time (inf past the lifetime)
  std::vector<Jump> offspring;           // unmarked negative jumps: (real time, child size)
  double eta_horizon = 0.0;
};

// Tagged cell under the tilted law, with the marked/unmarked split of the
// negative jumps of eta = Levy process with exponent kappa(omega +-  + .).
SpineSample sample_spine(SpineSign sign, const CumulantFunction& kappa, double x0, double eta_horizon,
                         Rng& rng, const SimulationOptions& opts = {});

struct ManyToOneResult {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double z = 0.0;
  double lhs_ledger = 0.0;  // mean omega_+ ledger, for reference
};

ManyToOneResult many_to_one_check(const CumulantFunction& kappa, const std::function<double(double)>& f,
                                  double t, double x0, long n_rep, std::uint64_t seed,
                                  const Truncation& trunc, const SimulationOptions& opts = {});

void write_snapshot_csv(std::ostream& os, const GFSnapshot& snap);
void write_system_ndjson(std::ostream& os, const CellSystem& cs);

}  // namespace gfpeel
