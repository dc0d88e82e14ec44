// Random data for sweeps. Every sample draws from its own generator seeded
// by (seed, stream, index), so a sweep gives the same values whatever the
// worker count and scheduling order.
#pragma once

#include "khess/torus.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace khess {

using Rng = std::mt19937_64;

/// Generator for sample `index` of stream `stream` under `seed`.
Rng sample_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Random point of Gamma_k in R^n by rejection: gaussian entries shifted by
/// a uniform offset in [-1, 3], times a log-uniform scale in [1e-2, 1e2].
std::vector<double> random_cone_vector(int n, int k, Rng& rng);

/// Gaussian vector in R^n (not restricted to any cone).
std::vector<double> random_real_vector(int n, Rng& rng);

/// Sum of `terms` Fourier modes with integer frequencies in [-fmax, fmax]
/// per real axis, scaled so the coefficient l1-norm is `amp`. The sup-norm is
/// therefore at most `amp`.
PotentialField random_potential(const BackgroundPtr& bg, Rng& rng, double amp, int fmax = 1, int terms = 5);

}  // namespace khess
