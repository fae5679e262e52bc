#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "swarmsim/geometry.hpp"

namespace swarmsim {

// Counter-based randomness. Every draw is a pure function of
// (seed, stream, key...), so results never depend on the order in which
// agents are visited or on how work is split across threads, and a world
// can be resumed from (seed, tick) without carrying generator state.

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Named draw streams. Values are part of the reproducibility contract.
enum class Stream : std::uint64_t {
  SpawnX = 1,
  SpawnY = 2,
  Heading = 3,
  SpeedFactor = 4,
  TurnFactor = 5,
  VisionDistance = 6,
  VisionHalfangle = 7,
  SensorFlip = 16,
  ActuationSpeed = 17,
  ActuationTurn = 18,
};

class KeyedRandom {
 public:
  constexpr explicit KeyedRandom(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t seed() const { return seed_; }

  constexpr std::uint64_t bits(Stream s, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    return hash_combine(seed_, {static_cast<std::uint64_t>(s), a, b, c});
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(Stream s, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    return static_cast<double>(bits(s, a, b, c) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes sub-keys 2c and 2c+1.
  double normal(Stream s, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    // (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform(s, a, b, 2 * c);
    const double u2 = uniform(s, a, b, 2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace swarmsim
