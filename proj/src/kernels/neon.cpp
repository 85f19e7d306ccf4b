#include <arm_neon.h>

#include <cmath>
#include <stdexcept>

#include "inl/kernels.hpp"
#include "lanes.hpp"

namespace inl::kernels::neon {

namespace {

// Four logical lanes held as two float64x2 registers (lanes 0-1 and 2-3).
struct VecAcc {
  float64x2_t prod[2] = {vdupq_n_f64(1.0), vdupq_n_f64(1.0)};
  int64x2_t exps[2] = {vdupq_n_s64(0), vdupq_n_s64(0)};
};

inline void split_into(float64x2_t& prod, int64x2_t& exps, float64x2_t x) {
  const uint64x2_t b = vreinterpretq_u64_f64(x);
  const int64x2_t e = vsubq_s64(vreinterpretq_s64_u64(vshrq_n_u64(b, 52)), vdupq_n_s64(1023));
  exps = vaddq_s64(exps, e);
  const uint64x2_t m = vorrq_u64(vandq_u64(b, vdupq_n_u64(lanes::kMantMask)), vdupq_n_u64(lanes::kOneBits));
  prod = vmulq_f64(prod, vreinterpretq_f64_u64(m));
}

inline void renorm(VecAcc& a) {
  for (int h = 0; h < 2; ++h) {
    const float64x2_t p = a.prod[h];
    a.prod[h] = vdupq_n_f64(1.0);
    split_into(a.prod[h], a.exps[h], p);
  }
}

inline lanes::Acc spill(const VecAcc& v, double special) {
  lanes::Acc a;
  vst1q_f64(a.prod, v.prod[0]);
  vst1q_f64(a.prod + 2, v.prod[1]);
  vst1q_s64(a.exps, v.exps[0]);
  vst1q_s64(a.exps + 2, v.exps[1]);
  a.special = special;
  return a;
}

inline VecAcc reload(const lanes::Acc& a) {
  VecAcc v;
  v.prod[0] = vld1q_f64(a.prod);
  v.prod[1] = vld1q_f64(a.prod + 2);
  v.exps[0] = vld1q_s64(a.exps);
  v.exps[1] = vld1q_s64(a.exps + 2);
  return v;
}

inline bool all_plain(float64x2_t a, float64x2_t b) {
  const float64x2_t lo = vdupq_n_f64(DBL_MIN);
  const float64x2_t hi = vdupq_n_f64(DBL_MAX);
  const uint64x2_t ok = vandq_u64(vandq_u64(vcgeq_f64(a, lo), vcleq_f64(a, hi)),
                                  vandq_u64(vcgeq_f64(b, lo), vcleq_f64(b, hi)));
  return vgetq_lane_u64(ok, 0) != 0 && vgetq_lane_u64(ok, 1) != 0;
}

template <class Load, class Get>
double reduce(std::size_t n, Load load, Get get) {
  VecAcc acc;
  double special = 0.0;
  const std::size_t blocks = n / lanes::kWidth;
  for (std::size_t b = 0; b < blocks; ++b) {
    const float64x2_t x0 = load(b * lanes::kWidth);
    const float64x2_t x1 = load(b * lanes::kWidth + 2);
    if (all_plain(x0, x1)) {
      split_into(acc.prod[0], acc.exps[0], x0);
      split_into(acc.prod[1], acc.exps[1], x1);
    } else {
      lanes::Acc s = spill(acc, special);
      for (std::size_t l = 0; l < lanes::kWidth; ++l) lanes::lane_update(s, l, get(b * lanes::kWidth + l));
      acc = reload(s);
      special = s.special;
    }
    if ((b + 1) % lanes::kRenormBlocks == 0) renorm(acc);
  }
  lanes::Acc s = spill(acc, special);
  for (std::size_t i = blocks * lanes::kWidth; i < n; ++i) lanes::lane_update(s, i - blocks * lanes::kWidth, get(i));
  return lanes::finish(s);
}

}  // namespace

double sum_log(std::span<const double> x) {
  const double* p = x.data();
  return reduce(
      x.size(), [&](std::size_t i) { return vld1q_f64(p + i); }, [&](std::size_t i) { return p[i]; });
}

double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u) {
  if (offset.size() != slope.size()) throw std::invalid_argument("sum_log_affine: size mismatch");
  const double* o = offset.data();
  const double* s = slope.data();
  const float64x2_t uu = vdupq_n_f64(u);
  return reduce(
      offset.size(), [&](std::size_t i) { return vfmaq_f64(vld1q_f64(o + i), vld1q_f64(s + i), uu); },
      [&](std::size_t i) { return std::fma(s[i], u, o[i]); });
}

void affine_update(std::span<const double> offset, std::span<const double> slope, double u, std::span<double> out) {
  if (offset.size() != slope.size() || out.size() != offset.size()) {
    throw std::invalid_argument("affine_update: size mismatch");
  }
  const std::size_t n = out.size();
  const float64x2_t uu = vdupq_n_f64(u);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out.data() + i, vfmaq_f64(vld1q_f64(offset.data() + i), vld1q_f64(slope.data() + i), uu));
  }
  for (; i < n; ++i) out[i] = std::fma(slope[i], u, offset[i]);
}

}  // namespace inl::kernels::neon
