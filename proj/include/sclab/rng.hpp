#pragma once

#include <cstdint>
#include <random>

namespace sclab {

// Every stochastic component owns an explicitly seeded engine so that a
// (spec, seed) pair pins all artifacts bit for bit.
using Rng = std::mt19937_64;

// Derives independent sub-seeds from a master seed (splitmix64 step).
// Distinct streams keep consumers decoupled: resizing one split or adding
// a consumer never perturbs the draws of another.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sclab
