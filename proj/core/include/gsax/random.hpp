#pragma once

#include <cstdint>
#include <random>

namespace gsax {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream identifiers into an independent seed
/// (SplitMix64 finalizer). Equal inputs always give equal outputs, so
/// work split across threads stays reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_a,
                          std::uint64_t stream_b = 0);

inline Rng make_rng(std::uint64_t base, std::uint64_t stream_a = 0,
                    std::uint64_t stream_b = 0) {
  return Rng(derive_seed(base, stream_a, stream_b));
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace gsax
