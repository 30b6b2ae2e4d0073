#pragma once

#include <string>
#include <string_view>

#include "rwr/error.hpp"

namespace rwr {

enum class CostMode { FixedCost, FixedBudget };

inline std::string_view to_string(CostMode m) { return m == CostMode::FixedCost ? "cost" : "budget"; }

/// Deferral cost c (squared-target units) or rejection budget gamma.
struct CostConfig {
  CostMode mode = CostMode::FixedCost;
  double cost_c = 2.0;
  double budget_gamma = 0.3;

  void validate() const {
    if (mode == CostMode::FixedCost)
      require(cost_c > 0.0, ErrorKind::InvalidArgument, "fixed-cost mode needs cost_c > 0");
    else
      require(budget_gamma > 0.0 && budget_gamma < 1.0, ErrorKind::InvalidArgument,
              "fixed-budget mode needs budget_gamma in (0,1)");
    require(cost_c >= 0.0, ErrorKind::InvalidArgument, "cost_c must be nonnegative");
  }

  double level() const noexcept { return mode == CostMode::FixedCost ? cost_c : budget_gamma; }

  friend bool operator==(const CostConfig&, const CostConfig&) = default;
};

}  // namespace rwr
