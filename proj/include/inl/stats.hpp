#pragma once

#include <cstddef>
#include <span>

namespace inl {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Unbiased (n - 1) estimator; 0 for a single sample.
  double stddev = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Mean, unbiased standard deviation and linearly interpolated percentiles
/// (Hyndman-Fan type 7). Throws std::invalid_argument on empty input.
Summary summarize(std::span<const double> samples);

/// Type-7 quantile of an already sorted sequence, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace inl
