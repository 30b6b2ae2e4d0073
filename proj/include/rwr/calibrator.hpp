#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/distance.hpp"
#include "rwr/error.hpp"
#include "rwr/regressor.hpp"
#include "rwr/task.hpp"

namespace rwr {

enum class KernelFamily { GaussianRBF };

struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianRBF;
  double length_scale_sigma = 1.0;
  std::vector<double> bandwidth_grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};

  void validate() const {
    require(length_scale_sigma > 0.0, ErrorKind::InvalidArgument, "kernel length scale must be positive");
    require(!bandwidth_grid.empty(), ErrorKind::InvalidArgument, "bandwidth grid is empty");
    for (double s : bandwidth_grid) require(s > 0.0, ErrorKind::InvalidArgument, "bandwidths must be positive");
  }

  /// k(x, x') = exp(-||x - x'||^2 / sigma).
  double operator()(std::span<const double> a, std::span<const double> b) const {
    return std::exp(-squared_distance(a, b) / length_scale_sigma);
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

enum class CalibratorKind { KernelSmoother, LinearOnFeatures, OracleRisk, TableLookup };

inline std::string_view to_string(CalibratorKind k) {
  switch (k) {
    case CalibratorKind::KernelSmoother: return "kernel";
    case CalibratorKind::LinearOnFeatures: return "loss-linear";
    case CalibratorKind::OracleRisk: return "oracle";
    case CalibratorKind::TableLookup: return "table";
  }
  return "unknown";
}

/// Nadaraya-Watson average of per-sample losses. Falls back to the loss of
/// the nearest stored point when every kernel weight underflows.
struct KernelSmoother {
  Dataset points;  // targets hold the per-sample losses
  KernelSpec kernel;

  double estimate(std::span<const double> x) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double w = kernel(x, points.row(i));
      num += w * points.target(i);
      den += w;
    }
    if (den > 0.0 && std::isfinite(num / den)) return num / den;
    return points.target(nearest_row(points.features(), points.dim(), x));
  }

  friend bool operator==(const KernelSmoother&, const KernelSmoother&) = default;
};

/// Linear predictor of the loss. Inputs are the raw features, or the
/// hidden-layer activations of `embedding` when it is an MLP.
struct LinearOnFeatures {
  std::vector<double> coef;
  double intercept = 0.0;
  std::shared_ptr<const RegressorModel> embedding;

  std::vector<double> features(std::span<const double> x) const {
    if (embedding) {
      if (const auto* mlp = embedding->as<MlpModel>()) return mlp->hidden_activations(x);
    }
    return {x.begin(), x.end()};
  }

  double estimate(std::span<const double> x) const {
    const auto phi = features(x);
    double s = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * phi[j];
    return s;
  }

  friend bool operator==(const LinearOnFeatures& a, const LinearOnFeatures& b) {
    return a.coef == b.coef && a.intercept == b.intercept &&
           (a.embedding == b.embedding || (a.embedding && b.embedding && *a.embedding == *b.embedding));
  }
};

/// True conditional risk R(f, x) = (f(x) - f̄(x))^2 + v(x).
struct OracleRisk {
  std::shared_ptr<const SyntheticTask> task;
  std::shared_ptr<const RegressorModel> regressor;

  double estimate(std::span<const double> x) const {
    const double bias = regressor->predict(x) - task->cond_mean(x);
    return bias * bias + task->cond_var(x);
  }

  friend bool operator==(const OracleRisk& a, const OracleRisk& b) {
    return a.task == b.task && a.regressor == b.regressor;
  }
};

/// Explicit point -> estimate map, nearest-point lookup.
struct TableCalibrator {
  std::size_t dim = 1;
  std::vector<double> points;
  std::vector<double> values;

  double estimate(std::span<const double> x) const { return values[nearest_row(points, dim, x)]; }
  friend bool operator==(const TableCalibrator&, const TableCalibrator&) = default;
};

/// Estimator R̂(f, x) of a regressor's conditional risk; never negative.
class CalibratorModel {
 public:
  using Payload = std::variant<KernelSmoother, LinearOnFeatures, OracleRisk, TableCalibrator>;

  explicit CalibratorModel(Payload payload) : payload_(std::move(payload)) {}

  static CalibratorModel oracle(std::shared_ptr<const SyntheticTask> task,
                                std::shared_ptr<const RegressorModel> regressor) {
    require(task && regressor, ErrorKind::UnsupportedTask, "oracle calibrator needs a task and a regressor");
    return CalibratorModel(OracleRisk{std::move(task), std::move(regressor)});
  }

  static CalibratorModel table(std::size_t dim, std::vector<double> points, std::vector<double> values) {
    require(dim >= 1 && !values.empty() && points.size() == values.size() * dim, ErrorKind::InvalidArgument,
            "table calibrator buffers disagree in size");
    return CalibratorModel(TableCalibrator{dim, std::move(points), std::move(values)});
  }

  CalibratorKind kind() const noexcept { return static_cast<CalibratorKind>(payload_.index()); }

  double estimate(std::span<const double> x) const {
    const double r = std::visit([&](const auto& c) { return c.estimate(x); }, payload_);
    return r > 0.0 ? r : 0.0;
  }

  const Payload& payload() const noexcept { return payload_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&payload_);
  }

  friend bool operator==(const CalibratorModel&, const CalibratorModel&) = default;

 private:
  Payload payload_;
};

}  // namespace rwr
