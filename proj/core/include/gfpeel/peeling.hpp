#pragma once

#include <deque>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gfpeel/nu_table.hpp"
#include "gfpeel/random.hpp"

namespace gfpeel {

// ---------------------------------------------------------------------------
// Perimeter chains

enum class ChainRegime { infinite, pointed, locally_largest };
std::string to_string(ChainRegime r);
ChainRegime chain_regime_from_string(const std::string& s);

// P(next = m + k | m). Zero outside the support.
double chain_probability(ChainRegime regime, long m, long k, const NuTable& nu);
// Sum of chain_probability over the support, tail completed by quadrature.
double chain_total_mass(ChainRegime regime, long m, const NuTable& nu);
// One step of the chain from half-perimeter m >= 1; returns the next half-perimeter.
long step_perimeter_chain(ChainRegime regime, long m, const NuTable& nu, Rng& rng);

// ---------------------------------------------------------------------------
// Lazy peeling

enum class PeelLaw { free, pointed, infinite };
std::string to_string(PeelLaw law);
PeelLaw peel_law_from_string(const std::string& s);

// Event on a hole of half-perimeter m. Indexed by the step j >= -m:
//   j >= 0       : C_k with k = j + 1 (new face of degree 2k, perimeter m -> m + j)
//   -m <= j < 0  : G(k1, k2) with k1 = -1 - j, k2 = m + j (hole splits, k1 + k2 = m - 1)
struct PeelEvent {
  enum class Kind { C, G };
  Kind kind = Kind::C;
  int hole = 0;
  long k = 0;   // C only
  long k1 = 0;  // G only: hole keeping the peeled edge's start
  long k2 = 0;
  // Doob laws: which side inherits the distinguished hole (G), or true if the
  // pointed vertex was absorbed into a new internal vertex.
  int distinguished_side = 0;  // 1 = k1 side, 2 = k2 side
  bool absorbed = false;
  std::vector<int> produced;  // holes resulting from the event (filled by peel_step)

  long step() const { return kind == Kind::C ? k - 1 : -1 - k1; }
};

// Step laws of one peeling event, as weights over j (see PeelEvent).
// free: P(j) = nu(j) nu(-1-m-j)/nu(-1-m), halved for j < 0.
// infinite / pointed: Doob transforms of the free law on the distinguished hole
// by f_up resp. the area functional (internal vertices + sum f_down).
class PeelKernel {
 public:
  explicit PeelKernel(const NuTable& nu);

  const NuTable& nu() const { return *nu_; }

  double weight(PeelLaw law, long m, long j) const;
  // Split of a G weight between its two sides (Doob laws): (w1, w2) with w1 + w2 = weight.
  std::pair<double, double> g_sides(PeelLaw law, long m, long j) const;
  // Total one-step mass over j >= -m with tail completion.
  double total_mass(PeelLaw law, long m) const;
  // Independent routes for the functional identities: sums of free P(j) times
  // f_up(after) resp. (new internal vertices + sum f_down(after)).
  double expected_f_up_after(long m) const;
  double expected_area_after(long m) const;

  // Samples an event for a hole of half-perimeter m. `law` is the law of that
  // hole (free for non-distinguished holes). Throws ConsistencyError if the
  // one-step mass deviates from 1 by more than 1e-6.
  PeelEvent sample(PeelLaw law, long m, Rng& rng) const;

 private:
  double checked_mass(PeelLaw law, long m) const;
  const NuTable* nu_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, long>, double> mass_cache_;
};

struct Hole {
  std::deque<long> vertices;  // circular; edge i joins vertices[i] and vertices[i+1]
  std::deque<int> heights;    // per-edge height tag
  bool open = true;
  bool frozen = false;

  long half_perimeter() const { return static_cast<long>(vertices.size()) / 2; }
};

// Explored part of a planar map, one or more holes, peeled at the last edge
// (vertices.back(), vertices.front()) of a hole.
class ExploredMap {
 public:
  ExploredMap(long half_perimeter, PeelLaw law);

  const std::vector<Hole>& holes() const { return holes_; }
  std::vector<long> half_perimeters() const;  // open holes, descending
  long open_holes() const { return open_holes_; }
  long vertices() const { return vertices_; }
  long edges() const { return edges_; }
  long faces() const { return faces_; }  // inner faces plus the root face
  long internal_vertices() const { return internal_vertices_; }
  long steps() const { return steps_; }
  long cycles_created() const { return cycles_created_; }
  long closures() const { return closures_; }
  // Holes left with an odd number of boundary edges by an event (always 0).
  long parity_violations() const { return parity_violations_; }
  PeelLaw law() const { return law_; }
  std::optional<int> distinguished() const { return distinguished_; }
  bool absorbed() const { return absorbed_; }

  // Law of the next event on hole h.
  PeelLaw hole_law(int h) const;
  // Applies e at the last edge of hole e.hole; new edges get height tag new_tag.
  // Returns the indices of the holes produced (0, 1 or 2 of them).
  std::vector<int> apply(const PeelEvent& e, int new_tag = 1);
  void freeze(int h);

  // V - E + F counting each open hole as a face; 2 at all times.
  long euler() const { return vertices_ - edges_ + faces_ + open_holes_; }
  // Throws ConsistencyError on parity, counter or vertex-accounting violations.
  void check_invariants() const;

 private:
  std::vector<Hole> holes_;
  long next_vertex_ = 0;
  long vertices_ = 0;
  long edges_ = 0;
  long faces_ = 1;
  long internal_vertices_ = 0;
  long open_holes_ = 1;
  long steps_ = 0;
  long cycles_created_ = 1;
  long closures_ = 0;
  long parity_violations_ = 0;
  PeelLaw law_;
  std::optional<int> distinguished_;
  bool absorbed_ = false;
};

// Peels hole h once under its law and applies the event.
PeelEvent peel_step(ExploredMap& map, int hole, const PeelKernel& kernel, Rng& rng, int new_tag = 1);

// (sum over open holes of f_up, internal vertices + sum of f_down)
std::pair<double, double> cycle_area_functionals(const ExploredMap& map, const NuTable& nu);

struct PeelOutcome {
  long vertices = 0;
  long edges = 0;
  long faces = 0;  // inner faces (the root face excluded)
  long steps = 0;
  long euler_residual = 0;  // V - E + F - 2 of the completed map
  long parity_violations = 0;
  bool censored = false;  // budget exhausted
};

// Explores a free Boltzmann map of perimeter 2l to completion, depth first.
// Euler's relation is asserted on completion. `log` receives one NDJSON line per event.
PeelOutcome peel_until_done(long l, const PeelKernel& kernel, Rng& rng, long budget,
                            std::ostream* log = nullptr);

struct LayerRun {
  std::vector<std::vector<long>> layers;  // L(r), r = 0, 1, ...; descending half-perimeters
  bool truncated = false;
  long steps = 0;
  long cycles_created = 0;
  long closures = 0;
};

// Peeling by layers: always peels a height-h edge followed (clockwise) by a
// height-(h+1) edge when one exists, else a height-h edge; L(r) is recorded
// each time the minimal boundary height reaches r. Stops after L(r_max), when
// no hole remains, or when the step budget runs out (truncated).
LayerRun layer_peel(long l, PeelLaw law, const PeelKernel& kernel, Rng& rng, int r_max, long budget);

// {step, hole, kind, k or k1/k2, perims_after}; perims_after lists the produced holes.
void write_event_ndjson(std::ostream& os, long step, const PeelEvent& e, const ExploredMap& map);
void write_layers_csv(std::ostream& os, const LayerRun& run);

}  // namespace gfpeel
