#pragma once

#include <cmath>
#include <cstdint>

namespace m2ae {

/// splitmix64 step; the basis for all counter-based streams.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Counter-based stream: value k of stream (seed, index). Stateless, so
/// parallel evaluation over pixels stays deterministic.
inline uint64_t counter_rng(uint64_t seed, uint64_t index, uint64_t k) {
  return splitmix64(splitmix64(seed ^ (index * 0x9e3779b97f4a7c15ull)) + k);
}

/// Uniform in (0, 1), never returning exactly 0 or 1.
inline double to_unit(uint64_t bits) {
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return u <= 0.0 ? 0x1.0p-53 : u;
}

/// Standard Gumbel(0,1) draw from one counter value.
inline double gumbel_noise(uint64_t bits) { return -std::log(-std::log(to_unit(bits))); }

/// Uniform in [lo, hi).
inline float uniform_range(uint64_t bits, float lo, float hi) {
  return lo + static_cast<float>(to_unit(bits)) * (hi - lo);
}

}  // namespace m2ae
