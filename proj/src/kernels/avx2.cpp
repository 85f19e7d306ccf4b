#include <immintrin.h>

#include <cmath>
#include <stdexcept>

#include "inl/kernels.hpp"
#include "lanes.hpp"

namespace inl::kernels::avx2 {

namespace {

struct VecAcc {
  __m256d prod = _mm256_set1_pd(1.0);
  __m256i exps = _mm256_setzero_si256();
};

const __m256i kMant = _mm256_set1_epi64x(static_cast<long long>(lanes::kMantMask));
const __m256i kOne = _mm256_set1_epi64x(static_cast<long long>(lanes::kOneBits));
const __m256i kBias = _mm256_set1_epi64x(1023);

inline void split_into(VecAcc& a, __m256d x) {
  const __m256i b = _mm256_castpd_si256(x);
  a.exps = _mm256_add_epi64(a.exps, _mm256_sub_epi64(_mm256_srli_epi64(b, 52), kBias));
  a.prod = _mm256_mul_pd(a.prod, _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(b, kMant), kOne)));
}

inline void renorm(VecAcc& a) {
  const __m256i b = _mm256_castpd_si256(a.prod);
  a.exps = _mm256_add_epi64(a.exps, _mm256_sub_epi64(_mm256_srli_epi64(b, 52), kBias));
  a.prod = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(b, kMant), kOne));
}

inline lanes::Acc spill(const VecAcc& v, double special) {
  lanes::Acc a;
  _mm256_storeu_pd(a.prod, v.prod);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(a.exps), v.exps);
  a.special = special;
  return a;
}

inline VecAcc reload(const lanes::Acc& a) {
  VecAcc v;
  v.prod = _mm256_loadu_pd(a.prod);
  v.exps = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.exps));
  return v;
}

// All lanes are normal positive finite doubles.
inline bool all_plain(__m256d x) {
  const __m256d lo = _mm256_cmp_pd(x, _mm256_set1_pd(DBL_MIN), _CMP_GE_OQ);
  const __m256d hi = _mm256_cmp_pd(x, _mm256_set1_pd(DBL_MAX), _CMP_LE_OQ);
  return _mm256_movemask_pd(_mm256_and_pd(lo, hi)) == 0xF;
}

template <class Load, class Get>
double reduce(std::size_t n, Load load, Get get) {
  VecAcc acc;
  double special = 0.0;
  const std::size_t blocks = n / lanes::kWidth;
  for (std::size_t b = 0; b < blocks; ++b) {
    const __m256d x = load(b * lanes::kWidth);
    if (all_plain(x)) {
      split_into(acc, x);
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
      x.size(), [&](std::size_t i) { return _mm256_loadu_pd(p + i); }, [&](std::size_t i) { return p[i]; });
}

double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u) {
  if (offset.size() != slope.size()) throw std::invalid_argument("sum_log_affine: size mismatch");
  const double* o = offset.data();
  const double* s = slope.data();
  const __m256d uu = _mm256_set1_pd(u);
  return reduce(
      offset.size(),
      [&](std::size_t i) { return _mm256_fmadd_pd(_mm256_loadu_pd(s + i), uu, _mm256_loadu_pd(o + i)); },
      [&](std::size_t i) { return std::fma(s[i], u, o[i]); });
}

void affine_update(std::span<const double> offset, std::span<const double> slope, double u, std::span<double> out) {
  if (offset.size() != slope.size() || out.size() != offset.size()) {
    throw std::invalid_argument("affine_update: size mismatch");
  }
  const std::size_t n = out.size();
  const __m256d uu = _mm256_set1_pd(u);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i,
                     _mm256_fmadd_pd(_mm256_loadu_pd(slope.data() + i), uu, _mm256_loadu_pd(offset.data() + i)));
  }
  for (; i < n; ++i) out[i] = std::fma(slope[i], u, offset[i]);
}

}  // namespace inl::kernels::avx2
