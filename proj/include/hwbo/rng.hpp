#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hwbo {

using Rng = std::mt19937_64;

/// Builds an independent generator for (seed, stream...) so that every
/// consumer can derive its own stream without sharing state.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> streams = {}) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto s : streams) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from a 64-bit hash value.
inline double unit_from_hash(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace hwbo
