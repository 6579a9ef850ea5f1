#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfpeel/experiments.hpp"

namespace gfpeel {

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  double wall_seconds = 0.0;

  bool pass() const;
  nlohmann::json to_json() const;
};

inline constexpr std::uint64_t kAcceptanceSeed = 20240611;

// 1: exact identities of the cumulant family.
SuiteResult suite_exact_identities();
// 2: step law, harmonic functions and peeling kernel on a K-point table.
SuiteResult suite_combinatorial(double theta = 1.25, long k_max = 100000);
// 3: mean volume of free Boltzmann maps, Euler and parity bookkeeping.
SuiteResult suite_map_monte_carlo(std::uint64_t seed = kAcceptanceSeed, long replicates = 100000);
// 4: martingale means, m(q), the fixed-time martingale and the spine's marked jumps.
SuiteResult suite_martingales(std::uint64_t seed = kAcceptanceSeed);
// 5: area law, perimeter chains, many-to-one and the intrinsic-area tail.
SuiteResult suite_distributional(std::uint64_t seed = kAcceptanceSeed);

// Dispatches on the criterion number 1..5; throws DomainError otherwise.
SuiteResult run_suite(int criterion, std::uint64_t seed = kAcceptanceSeed);

}  // namespace gfpeel
