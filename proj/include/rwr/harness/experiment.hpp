#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rwr/calibrator.hpp"
#include "rwr/cost.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/harness/config.hpp"
#include "rwr/harness/csv.hpp"
#include "rwr/harness/report.hpp"
#include "rwr/knn.hpp"
#include "rwr/losses.hpp"
#include "rwr/mlp.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rejection.hpp"
#include "rwr/rejector.hpp"
#include "rwr/rng.hpp"
#include "rwr/serialize.hpp"
#include "rwr/task.hpp"

namespace rwr::harness {

/// Seed of repeat i: master seed + i. Each component draws from its own
/// named stream of that seed (sample, split, model, folds).
inline std::uint64_t repeat_seed(std::uint64_t master, std::size_t repeat) { return master + repeat; }

struct RepeatOutcome {
  LossReport test;
  nlohmann::json selection = nlohmann::json::object();
  // Fitted pipeline, in standardized coordinates described by `scaling`.
  std::shared_ptr<const RegressorModel> regressor;
  std::shared_ptr<const RejectorModel> rejector;
  ScalingParams scaling;
  double train_mse = 0.0;
  double test_mse = 0.0;
};

/// Data shared by every repeat: the parsed CSV, or the synthetic task.
struct ExperimentSource {
  std::optional<Dataset> data;
  std::optional<SyntheticTask> task;
  std::size_t dropped_rows = 0;

  static ExperimentSource load(const ExperimentConfig& cfg) {
    ExperimentSource s;
    if (cfg.is_synthetic()) {
      s.task = tasks::by_name(cfg.synthetic_name());
    } else {
      CsvDiagnostics diag;
      s.data = load_csv(cfg.dataset_source, cfg.target_column, &diag);
      s.dropped_rows = diag.dropped.size();
    }
    return s;
  }
};

namespace detail {

inline std::pair<Dataset, Dataset> halves(const Dataset& d) {
  require(d.size() >= 2, ErrorKind::EmptyValidation, "calibration split needs at least two rows");
  std::vector<std::size_t> a(d.size() / 2), b(d.size() - d.size() / 2);
  std::iota(a.begin(), a.end(), std::size_t{0});
  std::iota(b.begin(), b.end(), a.size());
  return {d.subset(a), d.subset(b)};
}

inline std::shared_ptr<const RegressorModel> fit_regressor(const ExperimentConfig& cfg, const Dataset& train,
                                                           const Dataset& val, const SyntheticTask* task,
                                                           std::uint64_t seed, nlohmann::json& sel) {
  switch (cfg.regressor) {
    case RegressorChoice::Knn: {
      KnnConfig kc = cfg.knn;
      if (cfg.knn_selection == KnnSelection::Validation)
        kc.k = select_knn_k(train, val, kc.k_grid);
      else if (cfg.knn_selection == KnnSelection::CrossValidation)
        kc.k = cv_select_knn_k(train, kc.k_grid, kc.cv_folds, RngHandle{seed, streams::kFolds});
      sel["k"] = kc.k;
      return std::make_shared<const RegressorModel>(fit_knn(train, kc));
    }
    case RegressorChoice::Mlp: {
      MlpConfig mc = cfg.mlp;
      mc.init_seed = RngHandle{seed, streams::kModel};
      return std::make_shared<const RegressorModel>(fit_mlp(train, mc));
    }
    case RegressorChoice::Oracle: {
      require(task && task->is_discrete(), ErrorKind::UnsupportedTask,
              "the oracle regressor is a lookup table over a discrete support");
      std::vector<double> pts(task->support_points().begin(), task->support_points().end());
      std::vector<double> means;
      for (const auto& n : task->nodes()) means.push_back(n.mean);
      return std::make_shared<const RegressorModel>(RegressorModel::table(task->dim(), pts, std::move(means)));
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown regressor");
}

inline KernelSpec kernel_from(const ExperimentConfig& cfg) {
  KernelSpec k;
  k.bandwidth_grid = cfg.sigma_grid;
  return k;
}

/// Calibrator of the given kind fit on `data`. Kernel bandwidths are chosen
/// on the halves of `data`, by held-out RwR loss at `cost` if given, else by
/// held-out fit of the realized losses.
inline std::shared_ptr<const CalibratorModel> fit_calibrator(const ExperimentConfig& cfg, RejectorChoice kind,
                                                             const std::shared_ptr<const RegressorModel>& f,
                                                             const Dataset& data, const SyntheticTask* task,
                                                             std::optional<double> cost, nlohmann::json& sel) {
  switch (kind) {
    case RejectorChoice::Kernel: {
      const auto [inner, outer] = halves(data);
      const KernelSpec k = cost ? select_bandwidth(*f, inner, outer, kernel_from(cfg), *cost)
                                : select_bandwidth_by_fit(*f, inner, outer, kernel_from(cfg));
      sel["sigma"] = k.length_scale_sigma;
      return std::make_shared<const CalibratorModel>(kernel_calibrate(*f, data, k));
    }
    case RejectorChoice::LossLinear:
      return std::make_shared<const CalibratorModel>(fit_loss_linear(f, data));
    case RejectorChoice::Oracle:
      require(task != nullptr, ErrorKind::UnsupportedTask, "the oracle calibrator needs a synthetic task");
      return std::make_shared<const CalibratorModel>(
          CalibratorModel::oracle(std::make_shared<const SyntheticTask>(*task), f));
    case RejectorChoice::Conformal:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "conformal is a threshold rule, not a calibrator");
}

}  // namespace detail

/// One repeat: split, standardize (train statistics), fit the regressor on
/// train, calibrate the rejector on validation, evaluate on test.
inline RepeatOutcome run_repeat(const ExperimentConfig& cfg, const ExperimentSource& src, std::size_t index) {
  const std::uint64_t seed = repeat_seed(cfg.seed, index);
  Dataset data;
  if (src.task) {
    Rng rng(RngHandle{seed, streams::kSample});
    data = src.task->sample(cfg.n_samples, rng);
  } else {
    data = *src.data;
  }
  SplitSpec spec = cfg.split;
  spec.seed = seed;
  auto [train_raw, val_raw, test_raw] = split_dataset(data, spec);
  const auto st = standardize(train_raw, {val_raw, test_raw}, cfg.scale_targets);
  const Dataset& train = st.train;
  const Dataset& val = st.others[0];
  const Dataset& test = st.others[1];
  std::optional<SyntheticTask> scaled;
  if (src.task) scaled = src.task->transformed(st.params);
  const SyntheticTask* task = scaled ? &*scaled : nullptr;

  RepeatOutcome out;
  const auto f = detail::fit_regressor(cfg, train, val, task, seed, out.selection);
  const Dataset& cal_set = cfg.calibrate_on_train ? train : val;

  RejectorModel r = RejectorModel::constant(1);
  if (cfg.cost.mode == CostMode::FixedCost) {
    const double c = cfg.cost.cost_c;
    r = induce_rejector(detail::fit_calibrator(cfg, cfg.rejector, f, cal_set, task, c, out.selection), c);
  } else {
    const RejectorChoice source = cfg.rejector == RejectorChoice::Conformal ? cfg.scores_from : cfg.rejector;
    const auto [fit_part, score_part] = detail::halves(cal_set);
    const auto cal = detail::fit_calibrator(cfg, source, f, fit_part, task, std::nullopt, out.selection);
    const auto thr = conformal_threshold(calibrator_scores(*cal, score_part), cfg.cost.budget_gamma);
    out.selection["conformal"] = json::to_json(thr);
    r = conformal_rejector(cal, thr);
  }
  out.test = empirical_rwr_loss(*f, r, test, cfg.cost.cost_c);
  out.regressor = f;
  out.rejector = std::make_shared<const RejectorModel>(std::move(r));
  out.scaling = st.params;
  out.train_mse = empirical_squared_loss(*f, train);
  out.test_mse = empirical_squared_loss(*f, test);
  return out;
}

namespace detail {

/// Runs every repeat on a small worker pool; results are stored by repeat
/// index so the reduction does not depend on scheduling.
inline RunReport run_repeats(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const ExperimentSource src = ExperimentSource::load(cfg);
  std::vector<std::optional<RepeatOutcome>> results(cfg.repeats);
  std::vector<std::exception_ptr> errors(cfg.repeats);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.repeats; i = next++) {
      try {
        results[i] = run_repeat(cfg, src, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = cfg.worker_count();
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cfg.repeats; ++i) {
    if (!errors[i]) continue;
    const std::string where = "repeat " + std::to_string(i) + " (seed " +
                              std::to_string(repeat_seed(cfg.seed, i)) + "): ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    }
  }

  RunReport rep;
  rep.dataset = cfg.dataset_label();
  rep.method = cfg.method_label();
  rep.mode = cfg.cost.mode;
  rep.level = cfg.cost.level();
  for (std::size_t i = 0; i < cfg.repeats; ++i) {
    rep.repeats.push_back(results[i]->test);
    rep.selections.push_back(results[i]->selection);
    rep.seed_ledger.push_back({i, repeat_seed(cfg.seed, i)});
  }
  rep.recompute_aggregates();
  rep.config_echo = to_ini(cfg);
  rep.dropped_rows = src.dropped_rows;
  rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace detail

inline RunReport run_fixed_cost(const ExperimentConfig& cfg) {
  require(cfg.cost.mode == CostMode::FixedCost, ErrorKind::InvalidArgument, "run_fixed_cost needs cost mode");
  return detail::run_repeats(cfg);
}

inline RunReport run_fixed_budget(const ExperimentConfig& cfg) {
  require(cfg.cost.mode == CostMode::FixedBudget, ErrorKind::InvalidArgument, "run_fixed_budget needs budget mode");
  return detail::run_repeats(cfg);
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  return cfg.cost.mode == CostMode::FixedCost ? run_fixed_cost(cfg) : run_fixed_budget(cfg);
}

}  // namespace rwr::harness
