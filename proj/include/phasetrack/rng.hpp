#pragma once

// Portable, reproducible random streams.
//
// Each trajectory gets its own xoshiro256** generator whose 256-bit state is
// filled by SplitMix64 from a key derived from (master seed, stream index).
// Gaussian variates use the Box-Muller transform with an explicit cache, so
// the sequence depends only on this file and the platform libm, never on the
// standard library's distribution implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace phasetrack {

/// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding only.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna 2018).
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in (0, 1): 53 random bits, offset by half an ulp.
  constexpr double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Key for stream `index` under `master_seed`. Distinct indices give
/// unrelated SplitMix64 seeds.
constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t index) {
  SplitMix64 a(master_seed);
  SplitMix64 b(index ^ 0xD1B54A32D192ED03ULL);
  return a.next() ^ (b.next() * 0x9E3779B97F4A7C15ULL);
}

/// Standard normal stream for one trajectory.
class NormalStream {
 public:
  NormalStream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(stream_key(master_seed, index)) {}

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = engine_.uniform_open();
    const double u2 = engine_.uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform on (0, 1).
  double uniform() { return engine_.uniform_open(); }

 private:
  Xoshiro256 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace phasetrack
