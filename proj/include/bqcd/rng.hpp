#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace bqcd {

using Rng = std::mt19937_64;

// Derives the seed for trial `index` from a master seed: splitmix64 finalizer
// applied to master + (index+1) * golden-ratio increment. Trials get
// decorrelated generators regardless of execution order, which is what makes
// worker-count-independent results possible.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1), top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, m) by modulo rejection; exactly one engine draw
// except on the (astronomically rare) rejected tail block.
inline std::int64_t uniform_int(Rng& rng, std::int64_t m) {
  if (m < 1) throw std::invalid_argument("uniform_int: m must be >= 1");
  const std::uint64_t um = static_cast<std::uint64_t>(m);
  std::uint64_t x, r;
  do {
    x = rng();
    r = x % um;
  } while (x - r > std::numeric_limits<std::uint64_t>::max() - um + 1);
  return static_cast<std::int64_t>(r);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Standard normal via Box-Muller without caching the second value: a fixed
// two-draw cost keeps the per-observation draw count deterministic, which the
// reproducibility contract relies on.
inline double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace bqcd
