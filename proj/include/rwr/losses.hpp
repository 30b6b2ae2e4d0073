#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rwr/calibrator.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rejector.hpp"
#include "rwr/task.hpp"

namespace rwr {

/// Empirical RwR evaluation. machine_loss averages the squared loss over
/// accepted samples only; with nothing accepted it is 0 and all_deferred is set.
struct LossReport {
  double rwr_loss = 0.0;
  double machine_loss = 0.0;
  double rejection_rate = 0.0;
  std::size_t n_evaluated = 0;
  bool all_deferred = false;

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

inline LossReport empirical_rwr_loss(const RegressorModel& f, const RejectorModel& r, const Dataset& data,
                                     double c) {
  require(c >= 0.0, ErrorKind::InvalidArgument, "deferral cost must be nonnegative");
  require(!data.empty(), ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  double total = 0.0, machine = 0.0;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto x = data.row(i);
    if (r.accept(x)) {
      const double e = f.predict(x) - data.target(i);
      total += e * e;
      machine += e * e;
      ++accepted;
    } else {
      total += c;
    }
  }
  LossReport rep;
  const double n = static_cast<double>(data.size());
  rep.n_evaluated = data.size();
  rep.rwr_loss = total / n;
  rep.rejection_rate = static_cast<double>(data.size() - accepted) / n;
  rep.all_deferred = accepted == 0;
  rep.machine_loss = accepted == 0 ? 0.0 : machine / static_cast<double>(accepted);
  return rep;
}

inline double empirical_squared_loss(const RegressorModel& f, const Dataset& data) {
  require(!data.empty(), ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = f.predict(data.row(i)) - data.target(i);
    s += e * e;
  }
  return s / static_cast<double>(data.size());
}

namespace detail {
inline const std::vector<TaskNode>& exact_nodes(const SyntheticTask& task) {
  if (task.nodes().empty()) throw Error(ErrorKind::UnsupportedTask, "task has no closed-form risk");
  return task.nodes();
}
}  // namespace detail

/// R(f, x) = (f(x) - f̄(x))^2 + v(x) at one support/quadrature node.
inline double conditional_risk(const RegressorModel& f, const TaskNode& node) {
  const double bias = f.predict(node.x) - node.mean;
  return bias * bias + node.var;
}

inline double conditional_risk(const RegressorModel& f, const SyntheticTask& task, std::span<const double> x) {
  const double bias = f.predict(x) - task.cond_mean(x);
  return bias * bias + task.cond_var(x);
}

/// E[r(X) R(f, X) + (1 - r(X)) c].
inline double oracle_rwr_risk(const RegressorModel& f, const RejectorModel& r, const SyntheticTask& task, double c) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task))
    s += node.weight * (r.accept(node.x) ? conditional_risk(f, node) : c);
  return s;
}

/// E[min(R(f, X), c)].
inline double truncated_loss(const RegressorModel& f, const SyntheticTask& task, double c) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task)) s += node.weight * std::min(conditional_risk(f, node), c);
  return s;
}

/// E[(f(X) - Y)^2] = E[(f - f̄)^2] + E[v].
inline double squared_risk(const RegressorModel& f, const SyntheticTask& task) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task)) s += node.weight * conditional_risk(f, node);
  return s;
}

/// E[(f(X) - f̄(X))^2].
inline double prediction_error(const RegressorModel& f, const SyntheticTask& task) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task)) {
    const double bias = f.predict(node.x) - node.mean;
    s += node.weight * bias * bias;
  }
  return s;
}

/// E|R̂(f, X) - R(f, X)|.
inline double calibration_error(const CalibratorModel& calibrator, const RegressorModel& f,
                                const SyntheticTask& task) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task))
    s += node.weight * std::abs(calibrator.estimate(node.x) - conditional_risk(f, node));
  return s;
}

/// RwR risk of the Bayes pair, E[min(v(X), c)].
inline double bayes_rwr_risk(const SyntheticTask& task, double c) {
  double s = 0.0;
  for (const auto& node : detail::exact_nodes(task)) s += node.weight * std::min(node.var, c);
  return s;
}

struct ExcessLosses {
  double truncated = 0.0;
  double squared = 0.0;
};

/// Excess truncated and squared risk over the all-measurable minimizer f̄.
/// Summed term by term, so both are exactly nonnegative.
inline ExcessLosses excess_losses(const RegressorModel& f, const SyntheticTask& task, double c) {
  ExcessLosses out;
  for (const auto& node : detail::exact_nodes(task)) {
    const double bias = f.predict(node.x) - node.mean;
    const double risk = bias * bias + node.var;
    out.truncated += node.weight * (std::min(risk, c) - std::min(node.var, c));
    out.squared += node.weight * bias * bias;
  }
  return out;
}

}  // namespace rwr
