/**
 * @file rng.hpp
 * @brief Seeded random streams. Every storm / bootstrap replicate owns one
 * stream derived from (master seed, index), so results do not depend on how
 * work is split across threads.
 */
#pragma once

#include <cstdint>
#include <random>

namespace etcsim {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser over (master, index); distinct indices give
/// well-separated seeds.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) noexcept;

inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_stream_seed(master, index));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace etcsim
