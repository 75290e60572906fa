#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace semscan {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed plus a stream tag, so that (trial, day, stage) each get their
/// own generator without sharing state.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_seed(mix_seed(seed, a), b);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Draws an index with probability proportional to `weights`, given their
/// precomputed sum. Weights must be non-negative with a positive total.
inline std::size_t sample_weighted(Rng& rng, std::span<const double> weights, double total) {
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  // Rounding left u marginally non-negative; fall back to the last positive weight.
  for (std::size_t k = weights.size(); k-- > 0;)
    if (weights[k] > 0.0) return k;
  return 0;
}

inline int poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<int> dist(mean);
  return dist(rng);
}

}  // namespace semscan
