#include <atomic>
#include <stdexcept>
#include <string>

#include "inl/kernels.hpp"

namespace inl::kernels {

namespace {

Isa detect() {
#if defined(INL_HAVE_AVX2_KERNELS)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
#if defined(INL_HAVE_NEON_KERNELS)
  return Isa::Neon;
#endif
  return Isa::Scalar;
}

const Isa kDetected = detect();
std::atomic<int> g_forced{-1};

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(INL_HAVE_AVX2_KERNELS)
      return kDetected == Isa::Avx2;
#else
      return false;
#endif
    case Isa::Neon:
#if defined(INL_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  const int f = g_forced.load(std::memory_order_relaxed);
  return f < 0 ? kDetected : static_cast<Isa>(f);
}

void force_isa(std::optional<Isa> isa) {
  if (!isa) {
    g_forced.store(-1);
    return;
  }
  if (!isa_supported(*isa)) {
    throw std::invalid_argument(std::string("force_isa: ") + to_string(*isa) + " is not available");
  }
  g_forced.store(static_cast<int>(*isa));
}

double sum_log(std::span<const double> x) {
  switch (active_isa()) {
#if defined(INL_HAVE_AVX2_KERNELS)
    case Isa::Avx2: return avx2::sum_log(x);
#endif
#if defined(INL_HAVE_NEON_KERNELS)
    case Isa::Neon: return neon::sum_log(x);
#endif
    default: return scalar::sum_log(x);
  }
}

double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u) {
  switch (active_isa()) {
#if defined(INL_HAVE_AVX2_KERNELS)
    case Isa::Avx2: return avx2::sum_log_affine(offset, slope, u);
#endif
#if defined(INL_HAVE_NEON_KERNELS)
    case Isa::Neon: return neon::sum_log_affine(offset, slope, u);
#endif
    default: return scalar::sum_log_affine(offset, slope, u);
  }
}

void affine_update(std::span<const double> offset, std::span<const double> slope, double u, std::span<double> out) {
  switch (active_isa()) {
#if defined(INL_HAVE_AVX2_KERNELS)
    case Isa::Avx2: return avx2::affine_update(offset, slope, u, out);
#endif
#if defined(INL_HAVE_NEON_KERNELS)
    case Isa::Neon: return neon::affine_update(offset, slope, u, out);
#endif
    default: return scalar::affine_update(offset, slope, u, out);
  }
}

}  // namespace inl::kernels
