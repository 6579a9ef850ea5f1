#pragma once

#include <cstdint>
#include <random>

namespace gfpeel {

using Rng = std::mt19937_64;

// Generator for replicate `index` of a run seeded with `seed`. Streams for
// different indices are decorrelated through seed_seq mixing, so results do
// not depend on which worker handles which replicate.
inline Rng replicate_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

// Uniform on the open interval (0,1).
inline double uniform_open(Rng& rng) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0) return u;
  }
}

}  // namespace gfpeel
