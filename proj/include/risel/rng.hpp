#pragma once

// Reproducible random streams. The generator is xoshiro256** (Blackman and
// Vigna) seeded through splitmix64; both are fully specified integer
// recurrences, so streams are identical on every platform and compiler,
// unlike the std:: distributions whose algorithms are implementation-defined.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace risel {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for Monte Carlo trial `trial` derived from a base seed. Trials are
/// independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial) {
  std::uint64_t s = base ^ (trial * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  splitmix64(s);
  return splitmix64(s);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
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

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_left() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Pair of independent standard normals by the Box-Muller transform.
  std::array<double, 2> normal_pair() {
    const double u1 = uniform_open_left();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// Circularly-symmetric CN(0, 1): real and imaginary parts each have variance 1/2.
  std::complex<double> complex_normal() {
    const auto z = normal_pair();
    return {z[0] * std::numbers::sqrt2 / 2.0, z[1] * std::numbers::sqrt2 / 2.0};
  }

  /// e^{j phi} with phi uniform on [0, 2 pi).
  std::complex<double> unit_phase() { return std::polar(1.0, 2.0 * std::numbers::pi * uniform()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace risel
