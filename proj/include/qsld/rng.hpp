#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace qsld {

// Counter-based generator: output i of a stream is a pure function of
// (key, i), so any draw can be regenerated without replaying the stream.
// The mixing function is the SplitMix64 finalizer applied to
// key + i * golden-gamma, which is SplitMix64 started at `key`.
//
// split(id) derives an independent child stream; replications use
// root.split(replication_index) so results do not depend on how work is
// partitioned across threads.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix(seed ^ kSeedSalt)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  constexpr CounterRng split(std::uint64_t id) const noexcept {
    CounterRng child{};
    child.key_ = mix(key_ ^ mix(id + kSplitSalt));
    return child;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method (no cached spare, so
  // the stream position depends only on the number of calls).
  double normal() noexcept {
    for (;;) {
      const double u = 2.0 * uniform_open() - 1.0;
      const double v = 2.0 * uniform_open() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

 private:
  constexpr CounterRng() noexcept = default;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6A09E667F3BCC909ULL;
  static constexpr std::uint64_t kSplitSalt = 0xBB67AE8584CAA73BULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace qsld
