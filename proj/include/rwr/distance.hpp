#pragma once

#include <cstddef>
#include <limits>
#include <span>

namespace rwr {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

/// Index of the closest row of a row-major (m x d) buffer; ties go to the lower index.
inline std::size_t nearest_row(std::span<const double> rows, std::size_t d, std::span<const double> x) {
  const std::size_t m = d == 0 ? 0 : rows.size() / d;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double dist = squared_distance(rows.subspan(i * d, d), x);
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace rwr
