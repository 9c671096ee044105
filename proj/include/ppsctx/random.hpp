#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ppsctx {

/// Counter-based generator built on the SplitMix64 finalizer: the i-th draw of
/// a stream is a pure function of (key, i). Substreams derive fresh keys, so a
/// run partitioned over workers reproduces the sequential draws exactly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ull)) {}

  /// Independent stream for `index` (a worker, a sample, a test case).
  CounterRng substream(std::uint64_t index) const {
    return CounterRng(key_, mix(key_ + mix(index + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  std::uint64_t key() const noexcept { return key_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  CounterRng(std::uint64_t /*parent*/, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ppsctx
