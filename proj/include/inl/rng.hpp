#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace inl {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (master seed, stream index).
///
/// Draw k of a stream is a pure function of (seed, stream, k), so the
/// sequence seen by trajectory i does not depend on which worker runs it or
/// in which order. Collapse trajectories consume one draw per play, which
/// makes the play sign a function of (seed, trajectory, play index).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
      : master_seed_(master_seed),
        stream_index_(stream_index),
        key_(mix64(master_seed ^ mix64(stream_index + 0x9E3779B97F4A7C15ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t c = counter_++;
    return mix64(key_ ^ mix64(c * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// +1 or -1 with equal probability.
  int sign() noexcept { return (next_u64() >> 63) != 0 ? 1 : -1; }

  /// Standard normal deviate (Box-Muller, two draws per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream, deterministic in (this stream's key, index).
  RngStream substream(std::uint64_t index) const noexcept {
    return RngStream(key_, index);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace inl
