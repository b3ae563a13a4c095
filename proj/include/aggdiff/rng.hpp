#pragma once

#include <cstdint>
#include <random>

namespace aggdiff {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `master_seed`:
///   splitmix64(splitmix64(master_seed) ^ splitmix64(index + 1)).
/// Streams depend only on (master_seed, index), never on scheduling.
inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 1));
}

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t master_seed, std::uint64_t index) {
  return Engine(stream_seed(master_seed, index));
}

}  // namespace aggdiff
