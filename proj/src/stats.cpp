#include "inl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace inl {

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) {
    throw std::invalid_argument("sorted_quantile: empty input");
  }
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("summarize: empty sample list");
  }
  Summary s;
  s.count = samples.size();
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  s.p05 = sorted_quantile(sorted, 0.05);
  s.p50 = sorted_quantile(sorted, 0.50);
  s.p95 = sorted_quantile(sorted, 0.95);
  return s;
}

}  // namespace inl
