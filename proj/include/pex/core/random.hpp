#pragma once

#include <cstdint>
#include <random>

namespace pex {

using Engine = std::mt19937_64;

/// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Independent child seed for stream `stream` of `seed`. Streams with
/// different ids never share generator state, so callers can carve
/// work into streams without order effects.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(derive_seed(seed, stream));
}

/// Uniform double in [0,1) from a 64-bit hash value.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace pex
