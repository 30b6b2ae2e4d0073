#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/task.hpp"

namespace rwr::testing {

inline Dataset make_1d(std::vector<double> xs, std::vector<double> ys) {
  const std::size_t n = xs.size();
  return Dataset(n, 1, std::move(xs), std::move(ys));
}

inline std::span<const double> pt(const double& x) { return {&x, 1}; }

/// X in {0, 1} equiprobable, v = (1, 9), f̄ = (0, 0).
inline SyntheticTask two_point_task() {
  return SyntheticTask::discrete("two", 1, {0.0, 1.0}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 9.0});
}

}  // namespace rwr::testing
