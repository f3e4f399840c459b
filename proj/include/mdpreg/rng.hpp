#pragma once

#include <cstdint>
#include <random>

namespace mdpreg {

// SplitMix64 finalizer. Used to spread master seeds and stream indices over
// the full 64-bit space before seeding an engine, so that nearby indices give
// statistically unrelated streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent engine for stream `index` of a run keyed by `master_seed`.
// Replicates, bootstrap draws and sensitivity draws each get their own
// substream, so results are identical regardless of execution order or the
// number of worker threads.
inline std::mt19937_64 substream(std::uint64_t master_seed,
                                 std::uint64_t index) {
  return std::mt19937_64(mix64(mix64(master_seed) ^ mix64(index)));
}

// Uniform double in [0, 1) computed directly from engine output. Unlike the
// std distributions this has a fully pinned-down bit pattern, which keeps
// inverse-CDF lookups reproducible across standard-library versions.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mdpreg
