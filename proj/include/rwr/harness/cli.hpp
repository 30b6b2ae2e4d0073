#pragma once

// CLI11 bindings for ExperimentConfig. The same option names serve as
// command-line flags and as INI keys in a --config file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rwr/error.hpp"
#include "rwr/harness/config.hpp"

namespace rwr::harness {

/// Cost and budget levels; bench runs one experiment per level.
struct LevelLists {
  std::vector<double> costs;
  std::vector<double> budgets;
};

namespace detail {
template <typename E>
CLI::CheckedTransformer choices(const std::map<std::string, E>& m) {
  return CLI::CheckedTransformer(m, CLI::ignore_case);
}
}  // namespace detail

inline void bind_experiment_options(CLI::App& app, ExperimentConfig& cfg, LevelLists& levels) {
  const std::map<std::string, CostMode> modes{{"cost", CostMode::FixedCost}, {"budget", CostMode::FixedBudget}};
  const std::map<std::string, RegressorChoice> regs{
      {"knn", RegressorChoice::Knn}, {"mlp", RegressorChoice::Mlp}, {"oracle", RegressorChoice::Oracle}};
  const std::map<std::string, RejectorChoice> rejs{{"kernel", RejectorChoice::Kernel},
                                                   {"loss-linear", RejectorChoice::LossLinear},
                                                   {"conformal", RejectorChoice::Conformal},
                                                   {"oracle", RejectorChoice::Oracle}};
  const std::map<std::string, KnnSelection> sels{{"cv", KnnSelection::CrossValidation},
                                                 {"validation", KnnSelection::Validation},
                                                 {"fixed", KnnSelection::Fixed}};
  const std::map<std::string, ReportFormat> fmts{{"json", ReportFormat::Json}, {"csv", ReportFormat::Csv}};

  app.set_config("--config", "", "INI file with option defaults");
  app.add_option("--data", cfg.dataset_source, "CSV path or synthetic:<task>")->capture_default_str();
  app.add_option("--target-col", cfg.target_column, "Target column of a CSV dataset")->capture_default_str();
  app.add_option("--n-samples", cfg.n_samples, "Samples drawn from a synthetic task")->capture_default_str();
  app.add_option<CostMode, int>("--mode", cfg.cost.mode, "cost | budget")->transform(detail::choices(modes));
  app.add_option("--cost", levels.costs, "Deferral cost c (repeatable)")->delimiter(',');
  app.add_option("--budget", levels.budgets, "Rejection budget gamma (repeatable)")->delimiter(',');
  app.add_option<RegressorChoice, int>("--regressor", cfg.regressor, "knn | mlp | oracle")->transform(detail::choices(regs));
  app.add_option("--knn-k", cfg.knn.k, "k when --knn-select fixed")->capture_default_str();
  app.add_option<KnnSelection, int>("--knn-select", cfg.knn_selection, "cv | validation | fixed")->transform(detail::choices(sels));
  app.add_option("--knn-k-grid", cfg.knn.k_grid, "Candidate k values")->delimiter(',');
  app.add_option("--knn-folds", cfg.knn.cv_folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--mlp-hidden", cfg.mlp.hidden_width)->capture_default_str();
  app.add_option("--mlp-lr", cfg.mlp.learning_rate)->capture_default_str();
  app.add_option("--mlp-weight-decay", cfg.mlp.weight_decay)->capture_default_str();
  app.add_option("--mlp-batch", cfg.mlp.batch_size)->capture_default_str();
  app.add_option("--mlp-epochs", cfg.mlp.epochs)->capture_default_str();
  app.add_option<RejectorChoice, int>("--rejector", cfg.rejector, "kernel | loss-linear | conformal | oracle")
      ->transform(detail::choices(rejs));
  app.add_option<RejectorChoice, int>("--scores-from", cfg.scores_from, "Calibrator scored by the conformal rejector")
      ->transform(detail::choices(rejs));
  app.add_option("--sigma-grid", cfg.sigma_grid, "Kernel bandwidth candidates")->delimiter(',');
  app.add_option("--split-train", cfg.split.train_fraction)->capture_default_str();
  app.add_option("--split-val", cfg.split.val_fraction)->capture_default_str();
  app.add_option("--split-test", cfg.split.test_fraction)->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--repeats", cfg.repeats, "Independent repeats")->capture_default_str();
  app.add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();
  app.add_option<ReportFormat, int>("--format", cfg.format, "json | csv")->transform(detail::choices(fmts));
  app.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--calibrate-on-train", cfg.calibrate_on_train, "Calibrate on the training split")
      ->capture_default_str();
  app.add_option("--scale-targets", cfg.scale_targets, "Standardize targets with train statistics")
      ->capture_default_str();
}

/// Applies the first listed level to cfg; the rest are returned for sweeps.
inline std::vector<ExperimentConfig> expand_levels(const ExperimentConfig& cfg, const LevelLists& levels) {
  std::vector<ExperimentConfig> out;
  const auto& list = cfg.cost.mode == CostMode::FixedCost ? levels.costs : levels.budgets;
  if (list.empty()) {
    out.push_back(cfg);
    if (cfg.cost.mode == CostMode::FixedBudget && !levels.costs.empty()) out.back().cost.cost_c = levels.costs.front();
    return out;
  }
  for (double v : list) {
    ExperimentConfig c = cfg;
    if (cfg.cost.mode == CostMode::FixedCost) {
      c.cost.cost_c = v;
      if (!levels.budgets.empty()) c.cost.budget_gamma = levels.budgets.front();
    } else {
      c.cost.budget_gamma = v;
      if (!levels.costs.empty()) c.cost.cost_c = levels.costs.front();
    }
    out.push_back(c);
  }
  return out;
}

/// Parses INI text (as written by to_ini) into a config.
inline ExperimentConfig parse_ini(const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("rwr-config-" + std::to_string(std::hash<std::string>{}(text)) + ".ini");
  {
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    f << text;
  }
  ExperimentConfig cfg;
  LevelLists levels;
  CLI::App app;
  bind_experiment_options(app, cfg, levels);
  try {
    app.parse(std::vector<std::string>{path.string(), "--config"});
  } catch (const CLI::ParseError& e) {
    std::filesystem::remove(path);
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  std::filesystem::remove(path);
  return expand_levels(cfg, levels).front();
}

}  // namespace rwr::harness
