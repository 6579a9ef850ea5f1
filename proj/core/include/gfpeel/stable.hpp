#pragma once

#include <cstddef>

#include "gfpeel/random.hpp"
#include "gfpeel/statistics.hpp"

namespace gfpeel {

// Positive beta-stable variable S with E exp(-lambda S) = exp(-(Gamma(1 + 1/beta) lambda)^beta),
// so that E[1/S] = 1. Chambers-Mallows-Stuck draw, totally skewed to the right.
double sample_positive_stable(double beta, Rng& rng);

// n draws of S with weights proportional to 1/S (normalized to sum 1): a weighted
// representation of the law biased by x -> 1/x, which has mean 1.
WeightedSample inverse_size_biased_law(double beta, std::size_t n, Rng& rng);

}  // namespace gfpeel
