#pragma once

#include <optional>
#include <span>

namespace inl::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* to_string(Isa isa);

/// Compiled in and supported by the running CPU.
bool isa_supported(Isa isa);

/// Variant currently used by the dispatching entry points.
Isa active_isa();

/// Pins the dispatch to one variant (nullopt restores automatic selection).
/// Throws std::invalid_argument for an unsupported variant.
void force_isa(std::optional<Isa> isa);

/// sum_j log(x_j). Every variant reduces mantissas in four interleaved lanes
/// and carries binary exponents separately, so all variants return the same
/// bits for the same input.
double sum_log(std::span<const double> x);

/// sum_j log(offset_j + slope_j u), the affine value formed with one fused
/// multiply-add.
double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u);

/// out_j = fma(slope_j, u, offset_j).
void affine_update(std::span<const double> offset, std::span<const double> slope, double u,
                   std::span<double> out);

namespace scalar {
double sum_log(std::span<const double> x);
double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u);
void affine_update(std::span<const double> offset, std::span<const double> slope, double u,
                   std::span<double> out);
}  // namespace scalar

#if defined(INL_HAVE_AVX2_KERNELS)
namespace avx2 {
double sum_log(std::span<const double> x);
double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u);
void affine_update(std::span<const double> offset, std::span<const double> slope, double u,
                   std::span<double> out);
}  // namespace avx2
#endif

#if defined(INL_HAVE_NEON_KERNELS)
namespace neon {
double sum_log(std::span<const double> x);
double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u);
void affine_update(std::span<const double> offset, std::span<const double> slope, double u,
                   std::span<double> out);
}  // namespace neon
#endif

}  // namespace inl::kernels
