#pragma once

// Seed derivation. Every random stream is a pure function of
// (seed, stream id), so runs are reproducible and independent of worker
// scheduling.

#include "swarm_gp_et/gp.hpp"

#include <cstdint>
#include <random>

namespace swarm_gp_et {

namespace streams {
inline constexpr std::uint64_t kOfflineData = 0x100;   // + agent
inline constexpr std::uint64_t kMeasurement = 0x200;   // + agent
inline constexpr std::uint64_t kProbe = 0x300;         // + agent
}  // namespace streams

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 derive_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

template <class Rng>
Vector uniform_point(const Box& box, Rng& rng) {
  Vector x(box.dim());
  for (int k = 0; k < box.dim(); ++k) {
    std::uniform_real_distribution<double> u(box.lower(k), box.upper(k));
    x(k) = u(rng);
  }
  return x;
}

}  // namespace swarm_gp_et
