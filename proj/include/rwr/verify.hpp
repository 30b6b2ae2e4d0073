#pragma once

// Numerical verification of the theory: every bound is evaluated by exact
// enumeration on discrete tasks and reported with its worst-case margin
// (positive margin = inequality holds with room to spare).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwr/losses.hpp"
#include "rwr/oracle.hpp"
#include "rwr/rejection.hpp"
#include "rwr/rng.hpp"
#include "rwr/task.hpp"

namespace rwr {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  nlohmann::json detail = nlohmann::json::object();
};

struct TheoryReport {
  std::vector<PropertyResult> properties;

  bool all_passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed; });
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : properties)
      arr.push_back({{"name", p.name}, {"passed", p.passed}, {"margin", p.margin}, {"detail", p.detail}});
    return {{"all_passed", all_passed()}, {"properties", arr}};
  }
};

namespace verify {

inline constexpr double kExactTol = 1e-12;

/// Cost drawn so that it usually falls inside the variance range of random_discrete.
inline double random_cost(Rng& rng) { return rng.uniform(0.2, 5.0); }

inline PropertyResult surrogate_inequality(std::uint64_t seed, std::size_t trials = 100) {
  PropertyResult res{"surrogate_inequality"};
  Rng rng(RngHandle{seed, streams::kVerify});
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const auto task = tasks::random_discrete(rng);
    const double c = random_cost(rng);
    const auto f = random_tables::regressor(task, rng, rng.uniform(0.0, 4.0));
    const auto ex = excess_losses(f, task, c);
    margin = std::min(margin, ex.squared - ex.truncated);
  }
  res.margin = margin;
  res.passed = margin >= -kExactTol;
  res.detail = {{"trials", trials}, {"tolerance", kExactTol}};
  return res;
}

inline PropertyResult truncated_sandwich(std::uint64_t seed, std::size_t trials = 100) {
  PropertyResult res{"truncated_loss_lower_bound"};
  Rng rng(RngHandle{seed, streams::kVerify + 1});
  double margin = std::numeric_limits<double>::infinity();
  double equality_gap = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto task = tasks::random_discrete(rng);
    const double c = random_cost(rng);
    const auto f = random_tables::regressor(task, rng, rng.uniform(0.0, 4.0));
    const auto r = random_tables::rejector(task, rng);
    const double trunc = truncated_loss(f, task, c);
    margin = std::min(margin, oracle_rwr_risk(f, r, task, c) - trunc);
    auto own = CalibratorModel::oracle(std::make_shared<const SyntheticTask>(task),
                                       std::make_shared<const RegressorModel>(f));
    equality_gap = std::max(equality_gap, std::abs(oracle_rwr_risk(f, induce_rejector(own, c), task, c) - trunc));
  }
  res.margin = std::min(margin, kExactTol - equality_gap);
  res.passed = margin >= -kExactTol && equality_gap <= kExactTol;
  res.detail = {{"trials", trials}, {"min_gap", margin}, {"max_equality_gap", equality_gap}};
  return res;
}

inline PropertyResult calibration_bounds(std::uint64_t seed, std::size_t trials = 100) {
  PropertyResult res{"calibration_gap_and_decomposition"};
  Rng rng(RngHandle{seed, streams::kVerify + 2});
  double gap_margin = std::numeric_limits<double>::infinity();
  double thm_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const auto task = tasks::random_discrete(rng);
    const double c = random_cost(rng);
    const auto f = random_tables::regressor(task, rng, rng.uniform(0.0, 3.0));
    const auto cal = random_tables::calibrator(task, f, rng, rng.uniform(0.0, 2.0));
    const double achieved = oracle_rwr_risk(f, induce_rejector(cal, c), task, c);
    gap_margin = std::min(gap_margin,
                          truncated_loss(f, task, c) + calibration_error(cal, f, task) - achieved);
    thm_margin = std::min(thm_margin, check_excess_risk_bound(f, cal, task, c).slack());
  }
  const auto task = tasks::grid6();
  const auto bayes = oracle_bayes_pair(task, 2.0);
  const auto exact = CalibratorModel::oracle(std::make_shared<const SyntheticTask>(task),
                                             std::make_shared<const RegressorModel>(bayes.regressor));
  const auto tight = check_excess_risk_bound(bayes.regressor, exact, task, 2.0);
  const double tight_size = std::max({std::abs(tight.lhs), tight.prediction_error, tight.calibration_error});
  res.margin = std::min(gap_margin, thm_margin);
  res.passed = gap_margin >= -kExactTol && thm_margin >= -kExactTol && tight_size <= kExactTol;
  res.detail = {{"trials", trials},
                {"calibration_gap_margin", gap_margin},
                {"decomposition_margin", thm_margin},
                {"tight_case_max_term", tight_size}};
  return res;
}

inline PropertyResult bayes_pair_optimality(double c = 2.0) {
  PropertyResult res{"bayes_pair_optimality"};
  const auto task = tasks::grid6();
  const auto pair = oracle_bayes_pair(task, c);
  const double bayes = oracle_rwr_risk(pair.regressor, pair.rejector, task, c);
  const auto grid = grid_minimum_rwr(task, c, 4, 0.25 * std::sqrt(c));
  const double closed = bayes_rwr_risk(task, c);
  res.margin = grid.min_risk - bayes;
  res.passed = std::abs(grid.min_risk - bayes) <= 1e-10 && std::abs(bayes - closed) <= 1e-10;
  res.detail = {{"bayes_risk", bayes}, {"grid_min", grid.min_risk}, {"pairs", grid.pairs_enumerated},
                {"closed_form", closed}};
  return res;
}

inline PropertyResult weak_realizability(std::uint64_t seed, std::size_t trials = 100) {
  PropertyResult res{"conditional_mean_optimal_for_every_rejector"};
  Rng rng(RngHandle{seed, streams::kVerify + 3});
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const auto task = tasks::random_discrete(rng);
    const double c = random_cost(rng);
    const auto fbar = random_tables::regressor(task, rng, 0.0);
    for (int k = 0; k < 10; ++k) {
      const auto r = random_tables::rejector(task, rng);
      const auto g = random_tables::regressor(task, rng, rng.uniform(0.0, 3.0));
      margin = std::min(margin, oracle_rwr_risk(g, r, task, c) - oracle_rwr_risk(fbar, r, task, c));
    }
  }
  res.margin = margin;
  res.passed = margin >= -kExactTol;
  res.detail = {{"trials", trials}, {"rejectors_per_trial", 10}};
  return res;
}

inline PropertyResult pair_consistency() {
  PropertyResult res{"pair_consistency"};
  const auto task = tasks::grid6();
  const double c = 2.0;
  const auto pair = oracle_bayes_pair(task, c);
  const auto cal = CalibratorModel::oracle(std::make_shared<const SyntheticTask>(task),
                                           std::make_shared<const RegressorModel>(pair.regressor));
  const double achieved = oracle_rwr_risk(pair.regressor, induce_rejector(cal, c), task, c);
  const double optimum = oracle_rwr_risk(pair.regressor, pair.rejector, task, c);
  res.margin = kExactTol - std::abs(achieved - optimum);
  res.passed = std::abs(achieved - optimum) <= kExactTol;
  res.detail = {{"achieved", achieved}, {"optimum", optimum}};
  return res;
}

inline PropertyResult local_counterexample(std::uint64_t seed, double c = 2.0, std::size_t random_budget = 10000) {
  PropertyResult res{"local_but_not_global_optimum"};
  const auto task = tasks::grid6();
  const auto pair = build_local_counterexample(task, c);
  const auto rep =
      verify_local_optimality(pair, task, LocalityMetric{0.9 * std::sqrt(c)}, c, random_budget,
                              RngHandle{seed, streams::kVerify + 4});
  const double expected_gap = c - bayes_rwr_risk(task, c);
  res.margin = rep.best_neighbor_risk - rep.pair_risk;
  res.passed = rep.locally_optimal && std::abs(rep.pair_risk - c) <= kExactTol &&
               std::abs(rep.global_gap - expected_gap) <= kExactTol && rep.global_gap > 0.0;
  res.detail = {{"pair_risk", rep.pair_risk},
                {"best_neighbor_risk", rep.best_neighbor_risk},
                {"perturbations", rep.perturbations_checked},
                {"global_gap", rep.global_gap},
                {"expected_gap", expected_gap}};
  return res;
}

inline PropertyResult entrywise_counterexample(double c = 2.0) {
  PropertyResult res{"entrywise_but_not_global_optimum"};
  const auto task = tasks::grid6();
  const auto region = low_variance_region(task, c);
  const auto pair = build_entrywise_counterexample(task, c, region);
  const auto rep = verify_entrywise_optimality(pair, task, c);
  const double expected_gap = entrywise_gap(task, c, region);
  res.margin = std::min(rep.best_rejector_risk, rep.best_regressor_risk) - rep.pair_risk;
  res.passed = rep.entrywise_optimal() && rep.exhaustive && rep.global_gap > 0.0 &&
               std::abs(rep.global_gap - expected_gap) <= kExactTol;
  res.detail = {{"pair_risk", rep.pair_risk},
                {"rejectors_checked", rep.rejectors_checked},
                {"global_gap", rep.global_gap},
                {"expected_gap", expected_gap}};
  return res;
}

struct CoverageEstimate {
  double acceptance = 0.0;
  std::size_t trials = 0;
  std::size_t fresh_per_trial = 0;
};

/// Monte Carlo acceptance probability of the conformal rejector with
/// continuous scores s(x) = R(0, x) on hetero1d.
inline CoverageEstimate conformal_coverage(std::uint64_t seed, std::size_t m = 99, double gamma = 0.2,
                                           std::size_t trials = 2000, std::size_t fresh = 50) {
  const auto task = std::make_shared<const SyntheticTask>(tasks::hetero1d());
  const auto zero = std::make_shared<const RegressorModel>(RegressorModel::constant(0.0));
  const auto score = std::make_shared<const CalibratorModel>(CalibratorModel::oracle(task, zero));
  Rng rng(RngHandle{seed, streams::kVerify + 5});
  std::size_t accepted = 0;
  std::vector<double> scores(m);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& s : scores) s = score->estimate(task->draw_x(rng));
    const auto rej = conformal_rejector(score, conformal_threshold(scores, gamma));
    for (std::size_t k = 0; k < fresh; ++k) accepted += static_cast<std::size_t>(rej.accept(task->draw_x(rng)));
  }
  return {static_cast<double>(accepted) / static_cast<double>(trials * fresh), trials, fresh};
}

inline PropertyResult conformal_coverage_property(std::uint64_t seed) {
  PropertyResult res{"conformal_coverage"};
  const std::size_t m = 99;
  const double gamma = 0.2;
  const auto est = conformal_coverage(seed, m, gamma);
  const double lo = 1.0 - gamma - 0.03;
  const double hi = 1.0 - gamma + 1.0 / static_cast<double>(m + 1) + 0.03;
  res.margin = std::min(est.acceptance - lo, hi - est.acceptance);
  res.passed = res.margin >= 0.0;
  res.detail = {{"acceptance", est.acceptance}, {"lo", lo}, {"hi", hi}, {"trials", est.trials}};
  return res;
}

/// Plug-in classifier plus risk-thresholded rejector matches the brute-force
/// minimum over every classifier/rejector table on a small binary task.
inline PropertyResult classification_extension(double c = 0.3) {
  PropertyResult res{"classification_extension"};
  BinaryTask task{1, {0, 1, 2, 3}, {0.25, 0.25, 0.25, 0.25}, {0.9, 0.6, 0.5, 0.1}};
  const auto out = classify_with_rejection(task, c);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t fm = 0; fm < 16; ++fm)
    for (std::uint32_t rm = 0; rm < 16; ++rm) {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        const bool label = (fm >> i) & 1u;
        const double err = label ? 1.0 - task.eta[i] : task.eta[i];
        s += task.weights[i] * (((rm >> i) & 1u) ? err : c);
      }
      best = std::min(best, s);
    }
  res.margin = best - out.rwr_risk;
  res.passed = std::abs(best - out.rwr_risk) <= kExactTol;
  res.detail = {{"rwr_risk", out.rwr_risk}, {"brute_force_min", best}};
  return res;
}

inline TheoryReport run_theory_suite(std::uint64_t seed = 20240601) {
  TheoryReport rep;
  rep.properties.push_back(surrogate_inequality(seed));
  rep.properties.push_back(truncated_sandwich(seed));
  rep.properties.push_back(calibration_bounds(seed));
  rep.properties.push_back(bayes_pair_optimality());
  rep.properties.push_back(weak_realizability(seed));
  rep.properties.push_back(pair_consistency());
  rep.properties.push_back(local_counterexample(seed));
  rep.properties.push_back(entrywise_counterexample());
  rep.properties.push_back(conformal_coverage_property(seed));
  rep.properties.push_back(classification_extension());
  return rep;
}

}  // namespace verify
}  // namespace rwr
