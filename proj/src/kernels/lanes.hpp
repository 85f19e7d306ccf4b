#pragma once

// Lane arithmetic shared by every kernel variant.

#include <cfloat>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>

namespace inl::kernels::lanes {

inline constexpr std::size_t kWidth = 4;
// Blocks between mantissa renormalizations: 2^256 stays far below DBL_MAX.
inline constexpr std::size_t kRenormBlocks = 256;
inline constexpr std::uint64_t kMantMask = 0x000FFFFFFFFFFFFFULL;
inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr double kLn2 = 0.69314718055994530942;

struct Acc {
  double prod[kWidth] = {1.0, 1.0, 1.0, 1.0};
  std::int64_t exps[kWidth] = {0, 0, 0, 0};
  double special = 0.0;
};

inline std::uint64_t bits_of(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

inline double from_bits(std::uint64_t b) {
  double x;
  std::memcpy(&x, &b, sizeof x);
  return x;
}

inline bool is_plain(double x) { return x >= DBL_MIN && x <= DBL_MAX; }

inline void lane_update(Acc& a, std::size_t lane, double x) {
  if (!is_plain(x)) {
    a.special += std::log(x);
    return;
  }
  const std::uint64_t b = bits_of(x);
  a.exps[lane] += static_cast<std::int64_t>(b >> 52) - 1023;
  a.prod[lane] *= from_bits((b & kMantMask) | kOneBits);
}

inline void renorm(Acc& a) {
  for (std::size_t l = 0; l < kWidth; ++l) {
    const std::uint64_t b = bits_of(a.prod[l]);
    a.exps[l] += static_cast<std::int64_t>(b >> 52) - 1023;
    a.prod[l] = from_bits((b & kMantMask) | kOneBits);
  }
}

inline double finish(const Acc& a) {
  double logs = 0.0;
  std::int64_t e = 0;
  for (std::size_t l = 0; l < kWidth; ++l) {
    logs += std::log(a.prod[l]);
    e += a.exps[l];
  }
  const double scaled = static_cast<double>(e) * kLn2;
  return a.special + logs + scaled;
}

}  // namespace inl::kernels::lanes
