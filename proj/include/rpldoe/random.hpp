#pragma once

// Portable random draws. std::mt19937_64 output is fully specified by the
// standard, the std distributions are not, so the mapping to ranges lives here.

#include <cstdint>
#include <random>

namespace rpldoe {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags
/// (node id, stream purpose, repetition index, ...).
template <typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t base, Tags... tags) noexcept {
  std::uint64_t h = splitmix64(base);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(tags))), ...);
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform integer in [0, bound). bound must be > 0.
template <typename URBG>
std::uint64_t uniform_below(URBG& rng, std::uint64_t bound) {
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = static_cast<std::uint64_t>(rng());
  } while (x >= limit);
  return x % bound;
}

/// Uniform integer in [lo, hi).
template <typename URBG>
std::int64_t uniform_int(URBG& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo)));
}

/// Uniform double in [0, 1) with 53 random bits.
template <typename URBG>
double uniform_unit(URBG& rng) {
  return static_cast<double>(static_cast<std::uint64_t>(rng()) >> 11) * 0x1.0p-53;
}

template <typename URBG>
double uniform_real(URBG& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace rpldoe
