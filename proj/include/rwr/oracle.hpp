#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rwr/calibrator.hpp"
#include "rwr/error.hpp"
#include "rwr/losses.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rejection.hpp"
#include "rwr/rejector.hpp"
#include "rwr/rng.hpp"
#include "rwr/task.hpp"

namespace rwr {

/// Distances used for local optimality: sup-norm between regressors over
/// the support, disagreement probability between rejectors.
struct LocalityMetric {
  double radius = 0.0;

  static double regressor_distance(const RegressorModel& f, const RegressorModel& g, const SyntheticTask& task) {
    double d = 0.0;
    for (const auto& n : task.nodes()) d = std::max(d, std::abs(f.predict(n.x) - g.predict(n.x)));
    return d;
  }

  static double rejector_distance(const RejectorModel& r, const RejectorModel& s, const SyntheticTask& task) {
    double p = 0.0;
    for (const auto& n : task.nodes())
      if (r.accept(n.x) != s.accept(n.x)) p += n.weight;
    return p;
  }
};

/// Support-point view of a (regressor, rejector) pair on a discrete task.
struct TablePair {
  std::vector<double> values;
  std::vector<int> accept;
};

inline TablePair tabulate(const RegressorRejectorPair& pair, const SyntheticTask& task) {
  TablePair t;
  for (const auto& n : task.nodes()) {
    t.values.push_back(pair.regressor.predict(n.x));
    t.accept.push_back(pair.rejector.accept(n.x));
  }
  return t;
}

inline RegressorRejectorPair to_models(const TablePair& t, const SyntheticTask& task) {
  std::vector<double> pts(task.support_points().begin(), task.support_points().end());
  return {RegressorModel::table(task.dim(), pts, t.values), RejectorModel::table(task.dim(), pts, t.accept)};
}

/// L_RwR of tabulated values on a discrete task.
inline double table_rwr_risk(const SyntheticTask& task, std::span<const double> values, std::span<const int> accept,
                             double c) {
  double s = 0.0;
  const auto& nodes = task.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double b = values[i] - nodes[i].mean;
    s += nodes[i].weight * (accept[i] ? b * b + nodes[i].var : c);
  }
  return s;
}

namespace detail {
inline void require_discrete(const SyntheticTask& task) {
  if (!task.is_discrete()) throw Error(ErrorKind::UnsupportedTask, "search requires a discrete task");
}
}  // namespace detail

/// f0 = f̄ + 2 sqrt(c) where v <= c, f̄ elsewhere; r0 defers everything.
/// Every point then has conditional risk >= c, so L_RwR(f0, r0) = c, and
/// the pair stays optimal against perturbations of sup-norm below sqrt(c).
inline RegressorRejectorPair build_local_counterexample(const SyntheticTask& task, double c) {
  detail::require_discrete(task);
  if (!(task.min_var() < c && c < task.max_var()))
    throw Error(ErrorKind::PremiseViolated, "conditional variance must straddle the cost");
  TablePair t;
  const double shift = 2.0 * std::sqrt(c);
  for (const auto& n : task.nodes()) {
    t.values.push_back(n.var <= c ? n.mean + shift : n.mean);
    t.accept.push_back(0);
  }
  return to_models(t, task);
}

/// Default region for the entry-wise construction: all support points with v < c.
inline std::vector<bool> low_variance_region(const SyntheticTask& task, double c) {
  std::vector<bool> region;
  for (const auto& n : task.nodes()) region.push_back(n.var < c);
  return region;
}

/// f1 = f̄ + 2 sqrt(c) on `region` (v < c there), f̄ elsewhere; r1 is the
/// rejector induced by f1's true risk, which defers all of `region`.
inline RegressorRejectorPair build_entrywise_counterexample(const SyntheticTask& task, double c,
                                                   std::optional<std::vector<bool>> region = std::nullopt) {
  detail::require_discrete(task);
  const auto u1 = region ? *region : low_variance_region(task, c);
  require(u1.size() == task.support_size(), ErrorKind::InvalidArgument, "region mask has wrong length");
  double mass = 0.0;
  for (std::size_t i = 0; i < u1.size(); ++i) {
    if (!u1[i]) continue;
    if (!(task.nodes()[i].var < c))
      throw Error(ErrorKind::PremiseViolated, "region must have conditional variance below the cost");
    mass += task.nodes()[i].weight;
  }
  if (!(mass > 0.0)) throw Error(ErrorKind::PremiseViolated, "region must have positive probability");
  TablePair t;
  const double shift = 2.0 * std::sqrt(c);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    const auto& n = task.nodes()[i];
    const double value = u1[i] ? n.mean + shift : n.mean;
    const double b = value - n.mean;
    t.values.push_back(value);
    t.accept.push_back(b * b + n.var <= c ? 1 : 0);
  }
  return to_models(t, task);
}

/// E[1{X in U1}(c - v(X))], the optimality gap of the entry-wise construction.
inline double entrywise_gap(const SyntheticTask& task, double c, const std::vector<bool>& region) {
  double s = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region[i]) s += task.nodes()[i].weight * (c - task.nodes()[i].var);
  return s;
}

struct LocalOptimalityReport {
  bool locally_optimal = true;
  double pair_risk = 0.0;
  double best_neighbor_risk = std::numeric_limits<double>::infinity();
  std::size_t perturbations_checked = 0;
  double global_optimum = 0.0;
  double global_gap = 0.0;
  std::optional<TablePair> counterexample;
};

/// Searches the (sup-norm, disagreement) neighbourhood of radius
/// metric.radius for a pair with strictly lower RwR risk (margin 1e-10):
/// every single-coordinate move on a 41-point offset grid, every rejector
/// within the radius at the base regressor (support <= 12), and
/// `random_budget` random joint perturbations.
inline LocalOptimalityReport verify_local_optimality(const RegressorRejectorPair& pair, const SyntheticTask& task,
                                                     const LocalityMetric& metric, double c,
                                                     std::size_t random_budget, RngHandle rng_handle) {
  detail::require_discrete(task);
  const TablePair base = tabulate(pair, task);
  const std::size_t m = base.values.size();
  const double delta = metric.radius;
  const auto& nodes = task.nodes();

  LocalOptimalityReport rep;
  rep.pair_risk = table_rwr_risk(task, base.values, base.accept, c);
  rep.global_optimum = bayes_rwr_risk(task, c);
  rep.global_gap = rep.pair_risk - rep.global_optimum;

  auto disagreement = [&](const std::vector<int>& a) {
    double p = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (a[i] != base.accept[i]) p += nodes[i].weight;
    return p;
  };
  auto consider = [&](const TablePair& cand) {
    const double risk = table_rwr_risk(task, cand.values, cand.accept, c);
    ++rep.perturbations_checked;
    if (risk < rep.best_neighbor_risk) rep.best_neighbor_risk = risk;
    if (risk < rep.pair_risk - 1e-10 && rep.locally_optimal) {
      rep.locally_optimal = false;
      rep.counterexample = cand;
    }
  };

  constexpr int kOffsets = 41;
  for (std::size_t i = 0; i < m; ++i) {
    for (int s = 0; s < kOffsets; ++s) {
      const double off = -delta + 2.0 * delta * static_cast<double>(s) / (kOffsets - 1);
      for (int flip = 0; flip < 2; ++flip) {
        TablePair cand = base;
        cand.values[i] += off;
        if (flip) cand.accept[i] = 1 - cand.accept[i];
        if (disagreement(cand.accept) <= delta) consider(cand);
      }
    }
  }

  if (m <= 12) {
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      TablePair cand = base;
      for (std::size_t i = 0; i < m; ++i) cand.accept[i] = (mask >> i) & 1u;
      if (disagreement(cand.accept) <= delta) consider(cand);
    }
  }

  Rng rng(rng_handle);
  for (std::size_t t = 0; t < random_budget; ++t) {
    TablePair cand = base;
    for (std::size_t i = 0; i < m; ++i) {
      cand.values[i] += rng.uniform(-delta, delta);
      if (rng.bernoulli(0.5)) cand.accept[i] = 1 - cand.accept[i];
    }
    while (disagreement(cand.accept) > delta) {
      const std::size_t i = rng.below(m);
      cand.accept[i] = base.accept[i];
    }
    consider(cand);
  }
  return rep;
}

struct EntrywiseReport {
  bool rejector_optimal = true;
  bool regressor_optimal = true;
  double pair_risk = 0.0;
  double best_rejector_risk = std::numeric_limits<double>::infinity();
  double best_regressor_risk = std::numeric_limits<double>::infinity();
  std::size_t rejectors_checked = 0;
  bool exhaustive = true;
  double rejector_coverage = 1.0;
  double global_optimum = 0.0;
  double global_gap = 0.0;

  bool entrywise_optimal() const noexcept { return rejector_optimal && regressor_optimal; }
};

/// Checks that no rejector improves the pair with the regressor held fixed
/// (all 2^m when m <= 12, else 4096 uniform draws), and that no
/// single-coordinate change of the regressor on a dense grid improves it
/// with the rejector held fixed.
inline EntrywiseReport verify_entrywise_optimality(const RegressorRejectorPair& pair, const SyntheticTask& task,
                                                   double c, RngHandle rng_handle = {},
                                                   std::size_t grid_points = 161) {
  detail::require_discrete(task);
  const TablePair base = tabulate(pair, task);
  const std::size_t m = base.values.size();
  const auto& nodes = task.nodes();
  EntrywiseReport rep;
  rep.pair_risk = table_rwr_risk(task, base.values, base.accept, c);
  rep.global_optimum = bayes_rwr_risk(task, c);
  rep.global_gap = rep.pair_risk - rep.global_optimum;

  auto check_rejector = [&](const std::vector<int>& accept) {
    const double risk = table_rwr_risk(task, base.values, accept, c);
    ++rep.rejectors_checked;
    rep.best_rejector_risk = std::min(rep.best_rejector_risk, risk);
    if (risk < rep.pair_risk - 1e-10) rep.rejector_optimal = false;
  };
  if (m <= 12) {
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      std::vector<int> accept(m);
      for (std::size_t i = 0; i < m; ++i) accept[i] = (mask >> i) & 1u;
      check_rejector(accept);
    }
  } else {
    rep.exhaustive = false;
    constexpr std::size_t kSamples = 4096;
    Rng rng(rng_handle);
    for (std::size_t t = 0; t < kSamples; ++t) {
      std::vector<int> accept(m);
      for (auto& a : accept) a = rng.bernoulli(0.5) ? 1 : 0;
      check_rejector(accept);
    }
    rep.rejector_coverage = static_cast<double>(kSamples) / std::pow(2.0, static_cast<double>(m));
  }

  double spread = std::sqrt(c);
  for (std::size_t i = 0; i < m; ++i) spread = std::max(spread, std::abs(base.values[i] - nodes[i].mean));
  const double half_width = 4.0 * spread;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> candidates;
    for (std::size_t s = 0; s < grid_points; ++s)
      candidates.push_back(base.values[i] - half_width +
                           2.0 * half_width * static_cast<double>(s) / static_cast<double>(grid_points - 1));
    candidates.push_back(nodes[i].mean);
    for (double v : candidates) {
      std::vector<double> values = base.values;
      values[i] = v;
      const double risk = table_rwr_risk(task, values, base.accept, c);
      rep.best_regressor_risk = std::min(rep.best_regressor_risk, risk);
      if (risk < rep.pair_risk - 1e-10) rep.regressor_optimal = false;
    }
  }
  return rep;
}

struct GridSearchResult {
  double min_risk = std::numeric_limits<double>::infinity();
  TablePair argmin;
  std::uint64_t pairs_enumerated = 0;
};

/// Brute-force minimum of L_RwR over every table pair whose value at each
/// support point lies on f̄(x) + step * {-half_steps..half_steps} and every
/// rejector. Enumerates the full product depth-first with partial sums.
inline GridSearchResult grid_minimum_rwr(const SyntheticTask& task, double c, int half_steps, double step) {
  detail::require_discrete(task);
  const auto& nodes = task.nodes();
  const std::size_t m = nodes.size();
  require(m <= 8, ErrorKind::InvalidArgument, "grid enumeration limited to support size 8");
  GridSearchResult out;
  TablePair current{std::vector<double>(m), std::vector<int>(m)};

  auto recurse = [&](auto&& self, std::size_t i, double partial) -> void {
    if (i == m) {
      ++out.pairs_enumerated;
      if (partial < out.min_risk) {
        out.min_risk = partial;
        out.argmin = current;
      }
      return;
    }
    for (int s = -half_steps; s <= half_steps; ++s) {
      const double value = nodes[i].mean + step * static_cast<double>(s);
      const double b = value - nodes[i].mean;
      current.values[i] = value;
      for (int a = 0; a < 2; ++a) {
        current.accept[i] = a;
        self(self, i + 1, partial + nodes[i].weight * (a ? b * b + nodes[i].var : c));
      }
    }
  };
  recurse(recurse, 0, 0.0);
  return out;
}

/// Terms of the excess-risk decomposition for a regressor and a calibrator
/// of its conditional risk: lhs = L(f̂, r_R̂) - L(f*, r*) is bounded by
/// prediction_error + calibration_error.
struct ExcessRiskTerms {
  double lhs = 0.0;
  double prediction_error = 0.0;
  double calibration_error = 0.0;

  double slack() const noexcept { return prediction_error + calibration_error - lhs; }
};

inline ExcessRiskTerms check_excess_risk_bound(const RegressorModel& fhat, const CalibratorModel& calibrator,
                                    const SyntheticTask& task, double c) {
  ExcessRiskTerms t;
  const auto rej = induce_rejector(calibrator, c);
  t.lhs = oracle_rwr_risk(fhat, rej, task, c) - bayes_rwr_risk(task, c);
  t.prediction_error = prediction_error(fhat, task);
  t.calibration_error = calibration_error(calibrator, fhat, task);
  return t;
}

namespace random_tables {

/// f̄ plus uniform noise of the given half-width at each support point.
inline RegressorModel regressor(const SyntheticTask& task, Rng& rng, double half_width) {
  std::vector<double> pts(task.support_points().begin(), task.support_points().end());
  std::vector<double> values;
  for (const auto& n : task.nodes()) values.push_back(n.mean + rng.uniform(-half_width, half_width));
  return RegressorModel::table(task.dim(), std::move(pts), std::move(values));
}

inline RejectorModel rejector(const SyntheticTask& task, Rng& rng) {
  std::vector<double> pts(task.support_points().begin(), task.support_points().end());
  std::vector<int> accept;
  for (std::size_t i = 0; i < task.support_size(); ++i) accept.push_back(rng.bernoulli(0.5) ? 1 : 0);
  return RejectorModel::table(task.dim(), std::move(pts), std::move(accept));
}

/// True risk of `f` perturbed multiplicatively and additively, clamped at 0.
inline CalibratorModel calibrator(const SyntheticTask& task, const RegressorModel& f, Rng& rng, double noise) {
  std::vector<double> pts(task.support_points().begin(), task.support_points().end());
  std::vector<double> values;
  for (const auto& n : task.nodes()) {
    const double r = conditional_risk(f, n);
    values.push_back(std::max(0.0, r * rng.uniform(0.5, 1.5) + rng.uniform(-noise, noise)));
  }
  return CalibratorModel::table(task.dim(), std::move(pts), std::move(values));
}

}  // namespace random_tables

}  // namespace rwr
