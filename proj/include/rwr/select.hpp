#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rwr/error.hpp"

namespace rwr {

/// First index of the minimum; NaN entries never win.
inline std::size_t argmin_first(std::span<const double> values) {
  require(!values.empty(), ErrorKind::InvalidArgument, "argmin of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best] || (values[best] != values[best] && values[i] == values[i])) best = i;
  return best;
}

/// Grid element minimizing `loss`. The grid is visited in ascending order
/// and only a strictly smaller loss replaces the incumbent, so ties resolve
/// to the smallest parameter value.
template <class Param, class LossFn>
std::pair<Param, double> select_by_validation(std::vector<Param> grid, LossFn&& loss) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "hyperparameter grid is empty");
  std::sort(grid.begin(), grid.end());
  Param best = grid.front();
  double best_loss = loss(best);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double l = loss(grid[i]);
    if (l < best_loss) {
      best = grid[i];
      best_loss = l;
    }
  }
  return {best, best_loss};
}

}  // namespace rwr
