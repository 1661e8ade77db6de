#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace proxgrid {

/// SplitMix64 stream keyed by (seed, purpose name). Streams with different
/// purposes are independent, so adding draws to one never shifts another;
/// distributions are implemented explicitly for cross-platform repeatability.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view purpose) {
    // FNV-1a over the purpose, mixed with the seed
    uint64_t h = 1469598103934665603ull;
    for (char ch : purpose) {
      h ^= static_cast<uint8_t>(ch);
      h *= 1099511628211ull;
    }
    state_ = h ^ (seed * 0x9e3779b97f4a7c15ull);
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  /// uniform integer in [lo, hi], inclusive
  int uniform_int(int lo, int hi) {
    const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % range);
  }

  /// standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace proxgrid
