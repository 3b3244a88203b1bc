#pragma once

// Counter-based random streams.
//
// Every Monte Carlo batch draws from its own SplitMix64 stream keyed by
// (seed, stream tag, batch index). Results therefore depend only on the seed
// and the batch layout, never on how batches are spread across threads.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace steinmd {

inline constexpr std::uint64_t splitmix_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  /// Independent stream for (seed, tag, index).
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept {
    const std::uint64_t key = splitmix_mix(splitmix_mix(seed ^ 0x6a09e667f3bcc909ULL) + tag);
    return SplitMix64(splitmix_mix(key + splitmix_mix(index + 0x3c6ef372fe94f82bULL)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix_mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift (bias < 2^-64 * bound).
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace steinmd
