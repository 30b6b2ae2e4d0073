#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "rwr/calibrator.hpp"
#include "rwr/cost.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/knn.hpp"
#include "rwr/mlp.hpp"
#include "rwr/task.hpp"

namespace rwr::harness {

enum class RegressorChoice { Knn, Mlp, Oracle };
enum class RejectorChoice { Kernel, LossLinear, Conformal, Oracle };
enum class KnnSelection { CrossValidation, Validation, Fixed };
enum class ReportFormat { Json, Csv };

inline std::string_view to_string(RegressorChoice c) {
  switch (c) {
    case RegressorChoice::Knn: return "knn";
    case RegressorChoice::Mlp: return "mlp";
    case RegressorChoice::Oracle: return "oracle";
  }
  return "?";
}

inline std::string_view to_string(RejectorChoice c) {
  switch (c) {
    case RejectorChoice::Kernel: return "kernel";
    case RejectorChoice::LossLinear: return "loss-linear";
    case RejectorChoice::Conformal: return "conformal";
    case RejectorChoice::Oracle: return "oracle";
  }
  return "?";
}

inline std::string_view to_string(KnnSelection s) {
  switch (s) {
    case KnnSelection::CrossValidation: return "cv";
    case KnnSelection::Validation: return "validation";
    case KnnSelection::Fixed: return "fixed";
  }
  return "?";
}

inline std::string_view to_string(ReportFormat f) { return f == ReportFormat::Json ? "json" : "csv"; }

inline constexpr std::string_view kSyntheticPrefix = "synthetic:";

struct ExperimentConfig {
  std::string dataset_source = "synthetic:hetero1d";
  std::string target_column = "y";
  std::size_t n_samples = 1000;  // synthetic sources only
  CostConfig cost{};
  RegressorChoice regressor = RegressorChoice::Knn;
  KnnConfig knn{};
  KnnSelection knn_selection = KnnSelection::CrossValidation;
  MlpConfig mlp{};
  RejectorChoice rejector = RejectorChoice::Kernel;
  // Calibrator producing conformal scores when rejector is Conformal.
  RejectorChoice scores_from = RejectorChoice::Kernel;
  std::vector<double> sigma_grid = KernelSpec{}.bandwidth_grid;
  SplitSpec split{};
  std::uint64_t seed = 0;
  std::size_t repeats = 10;
  std::string output_dir = "out";
  ReportFormat format = ReportFormat::Json;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool calibrate_on_train = false;
  bool scale_targets = true;

  bool is_synthetic() const { return dataset_source.rfind(kSyntheticPrefix, 0) == 0; }
  std::string synthetic_name() const { return dataset_source.substr(kSyntheticPrefix.size()); }

  /// Short dataset label for tables: task name or file stem.
  std::string dataset_label() const {
    return is_synthetic() ? synthetic_name() : std::filesystem::path(dataset_source).stem().string();
  }

  std::string method_label() const {
    std::string m = std::string(to_string(regressor)) + "+" + std::string(to_string(rejector));
    if (rejector == RejectorChoice::Conformal) m += "(" + std::string(to_string(scores_from)) + ")";
    return m;
  }

  std::size_t worker_count() const {
    const std::size_t hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(hw, repeats));
  }

  void validate() const {
    cost.validate();
    split.validate();
    knn.validate();
    mlp.validate();
    require(repeats >= 1, ErrorKind::InvalidArgument, "repeats must be at least 1");
    require(!sigma_grid.empty(), ErrorKind::InvalidArgument, "sigma grid is empty");
    for (double s : sigma_grid) require(s > 0.0, ErrorKind::InvalidArgument, "bandwidths must be positive");
    require(scores_from != RejectorChoice::Conformal, ErrorKind::InvalidArgument,
            "scores must come from a calibrator, not from the conformal rejector");
    if (cost.mode == CostMode::FixedCost)
      require(rejector != RejectorChoice::Conformal, ErrorKind::InvalidArgument,
              "the conformal rejector needs a budget; use fixed-budget mode");
    if (is_synthetic()) {
      require(tasks::is_known(synthetic_name()), ErrorKind::InvalidArgument,
              "unknown synthetic task '" + synthetic_name() + "'");
      require(n_samples >= 1, ErrorKind::InvalidArgument, "n_samples must be positive");
    } else {
      require(std::filesystem::exists(dataset_source), ErrorKind::IoError,
              "dataset '" + dataset_source + "' does not exist");
    }
    const bool needs_task = regressor == RegressorChoice::Oracle || rejector == RejectorChoice::Oracle ||
                            (rejector == RejectorChoice::Conformal && scores_from == RejectorChoice::Oracle);
    if (needs_task)
      require(is_synthetic(), ErrorKind::UnsupportedTask, "oracle components need a synthetic task");
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

/// Shortest decimal text that parses back to the same double.
inline std::string exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += exact(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out + "]";
}

}  // namespace detail

/// Canonical INI text; keys match the CLI long flags so the file can be
/// passed back with --config to reproduce the run.
inline std::string to_ini(const ExperimentConfig& c) {
  using detail::exact;
  std::ostringstream o;
  o << "data = \"" << c.dataset_source << "\"\n"
    << "target-col = \"" << c.target_column << "\"\n"
    << "n-samples = " << c.n_samples << "\n"
    << "mode = " << to_string(c.cost.mode) << "\n"
    << "cost = " << exact(c.cost.cost_c) << "\n"
    << "budget = " << exact(c.cost.budget_gamma) << "\n"
    << "regressor = " << to_string(c.regressor) << "\n"
    << "knn-k = " << c.knn.k << "\n"
    << "knn-select = " << to_string(c.knn_selection) << "\n"
    << "knn-k-grid = " << detail::join(c.knn.k_grid) << "\n"
    << "knn-folds = " << c.knn.cv_folds << "\n"
    << "mlp-hidden = " << c.mlp.hidden_width << "\n"
    << "mlp-lr = " << exact(c.mlp.learning_rate) << "\n"
    << "mlp-weight-decay = " << exact(c.mlp.weight_decay) << "\n"
    << "mlp-batch = " << c.mlp.batch_size << "\n"
    << "mlp-epochs = " << c.mlp.epochs << "\n"
    << "rejector = " << to_string(c.rejector) << "\n"
    << "scores-from = " << to_string(c.scores_from) << "\n"
    << "sigma-grid = " << detail::join(c.sigma_grid) << "\n"
    << "split-train = " << exact(c.split.train_fraction) << "\n"
    << "split-val = " << exact(c.split.val_fraction) << "\n"
    << "split-test = " << exact(c.split.test_fraction) << "\n"
    << "seed = " << c.seed << "\n"
    << "repeats = " << c.repeats << "\n"
    << "out = \"" << c.output_dir << "\"\n"
    << "format = " << to_string(c.format) << "\n"
    << "threads = " << c.threads << "\n"
    << "calibrate-on-train = " << (c.calibrate_on_train ? "true" : "false") << "\n"
    << "scale-targets = " << (c.scale_targets ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace rwr::harness
