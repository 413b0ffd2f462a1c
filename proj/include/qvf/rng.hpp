#pragma once

#include <cstdint>
#include <random>

namespace qvf {

// splitmix64 finalizer. Used only for seed derivation, never as the main stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Child seed for stream `index` under `master`. All nested randomness (benchmark
// trial -> dataset -> row) is derived this way, so any unit of work can be
// executed independently of scheduling and still reproduce bit-for-bit.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace qvf
