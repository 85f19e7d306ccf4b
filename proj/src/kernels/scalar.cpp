#include <cmath>
#include <stdexcept>

#include "inl/kernels.hpp"
#include "lanes.hpp"

namespace inl::kernels::scalar {

namespace {

template <class Get>
double reduce(std::size_t n, Get get) {
  lanes::Acc acc;
  const std::size_t blocks = n / lanes::kWidth;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t l = 0; l < lanes::kWidth; ++l) lanes::lane_update(acc, l, get(b * lanes::kWidth + l));
    if ((b + 1) % lanes::kRenormBlocks == 0) lanes::renorm(acc);
  }
  for (std::size_t i = blocks * lanes::kWidth; i < n; ++i) lanes::lane_update(acc, i - blocks * lanes::kWidth, get(i));
  return lanes::finish(acc);
}

}  // namespace

double sum_log(std::span<const double> x) {
  return reduce(x.size(), [&](std::size_t i) { return x[i]; });
}

double sum_log_affine(std::span<const double> offset, std::span<const double> slope, double u) {
  if (offset.size() != slope.size()) throw std::invalid_argument("sum_log_affine: size mismatch");
  return reduce(offset.size(), [&](std::size_t i) { return std::fma(slope[i], u, offset[i]); });
}

void affine_update(std::span<const double> offset, std::span<const double> slope, double u, std::span<double> out) {
  if (offset.size() != slope.size() || out.size() != offset.size()) {
    throw std::invalid_argument("affine_update: size mismatch");
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fma(slope[i], u, offset[i]);
}

}  // namespace inl::kernels::scalar
