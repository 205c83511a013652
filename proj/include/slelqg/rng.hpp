#pragma once

// Counter-based random streams: every draw is a pure function of
// (seed, counter), so samples can be regenerated in any order or thread.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace slelqg::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Per-task seed: hash64(master_seed, experiment name, index).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name,
                                    std::uint64_t index) {
  return combine(combine(master_seed, fnv1a(name)), index);
}

/// Uniform in the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = combine(seed, counter) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on the uniform pair (2c, 2c+1).
inline double normal(std::uint64_t seed, std::uint64_t counter) {
  const double u1 = uniform(seed, 2 * counter);
  const double u2 = uniform(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace slelqg::rng
