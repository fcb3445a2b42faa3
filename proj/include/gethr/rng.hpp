#ifndef GETHR_RNG_HPP
#define GETHR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

#include "gethr/errors.hpp"

namespace gethr {

// 64-bit FNV-1a, used to derive stable per-name seed streams.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic generator (splitmix64 core). Sequences are reproducible for a
// given seed on any platform; they are not meant to match any other library.
struct SeededRng {
  std::uint64_t state = 0;

  SeededRng() = default;
  explicit SeededRng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo <= hi)) throw value_error("uniform: lo > hi");
    return lo + (hi - lo) * uniform01();
  }

  // Standard normal via Box-Muller. Two uniforms are consumed per call; the
  // second variate is discarded so the draw count stays predictable.
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard log(0).
    while (u1 == 0.0) u1 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Index in [0, n).
  std::size_t next_index(std::size_t n) {
    if (n == 0) throw value_error("next_index: n == 0");
    return static_cast<std::size_t>(next_u64() % n);
  }
};

// Mixes a master seed with a stream tag so independent phases (init, epochs,
// per-topology runs) draw from unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t z = master ^ fnv1a64(tag);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace gethr

#endif
