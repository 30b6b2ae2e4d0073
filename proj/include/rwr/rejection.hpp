#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "rwr/calibrator.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/losses.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rejector.hpp"
#include "rwr/select.hpp"
#include "rwr/task.hpp"

namespace rwr {

/// Per-sample squared losses (f(x_i) - y_i)^2 stored as the targets of a copy of `data`.
inline Dataset loss_dataset(const RegressorModel& f, const Dataset& data) {
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = f.predict(data.row(i)) - data.target(i);
    losses[i] = e * e;
  }
  return Dataset(data.size(), data.dim(), data.features(), std::move(losses), data.feature_names());
}

/// Kernel estimate of the conditional risk of `f` from held-out losses:
/// R̂(f, x) = sum_i k(x, x_i) l_i / sum_i k(x, x_i).
inline CalibratorModel kernel_calibrate(const RegressorModel& f, const Dataset& val, const KernelSpec& kernel) {
  if (val.empty()) throw Error(ErrorKind::EmptyValidation, "kernel calibration needs validation rows");
  kernel.validate();
  return CalibratorModel(KernelSmoother{loss_dataset(f, val), kernel});
}

inline RejectorModel induce_rejector(std::shared_ptr<const CalibratorModel> calibrator, double c) {
  require(c >= 0.0, ErrorKind::InvalidArgument, "deferral cost must be nonnegative");
  return RejectorModel::induced(std::move(calibrator), c);
}

inline RejectorModel induce_rejector(const CalibratorModel& calibrator, double c) {
  return induce_rejector(std::make_shared<const CalibratorModel>(calibrator), c);
}

/// Bandwidth from kernel.bandwidth_grid whose induced rejector, calibrated
/// on `val_inner`, has the lowest RwR loss on `val_outer`. Ties go to the
/// smaller bandwidth.
inline KernelSpec select_bandwidth(const RegressorModel& f, const Dataset& val_inner, const Dataset& val_outer,
                                   const KernelSpec& kernel, double c) {
  kernel.validate();
  const Dataset inner_losses = loss_dataset(f, val_inner);
  auto [sigma, loss] = select_by_validation(kernel.bandwidth_grid, [&](double s) {
    KernelSpec k = kernel;
    k.length_scale_sigma = s;
    auto cal = std::make_shared<const CalibratorModel>(KernelSmoother{inner_losses, k});
    return empirical_rwr_loss(f, induce_rejector(cal, c), val_outer, c).rwr_loss;
  });
  (void)loss;
  KernelSpec out = kernel;
  out.length_scale_sigma = sigma;
  return out;
}

/// Bandwidth minimizing the held-out squared error between R̂ and the
/// realized losses; used when no cost is available (fixed budget).
inline KernelSpec select_bandwidth_by_fit(const RegressorModel& f, const Dataset& val_inner,
                                          const Dataset& val_outer, const KernelSpec& kernel) {
  kernel.validate();
  const Dataset inner_losses = loss_dataset(f, val_inner);
  const Dataset outer_losses = loss_dataset(f, val_outer);
  auto [sigma, loss] = select_by_validation(kernel.bandwidth_grid, [&](double s) {
    KernelSpec k = kernel;
    k.length_scale_sigma = s;
    const KernelSmoother smoother{inner_losses, k};
    double sse = 0.0;
    for (std::size_t i = 0; i < outer_losses.size(); ++i) {
      const double e = smoother.estimate(outer_losses.row(i)) - outer_losses.target(i);
      sse += e * e;
    }
    return sse;
  });
  (void)loss;
  KernelSpec out = kernel;
  out.length_scale_sigma = sigma;
  return out;
}

namespace detail {

/// Solves the symmetric system A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      std::swap(b[col], b[piv]);
    }
    const double p = a[col * n + col];
    if (p == 0.0) continue;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / p;
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= factor * a[col * n + j];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = a[i * n + i] != 0.0 ? s / a[i * n + i] : 0.0;
  }
  return x;
}

}  // namespace detail

/// Least-squares linear model of the per-sample loss (small ridge 1e-8 for
/// conditioning). With an MLP regressor the inputs are its hidden-layer
/// activations, otherwise the raw features.
inline CalibratorModel fit_loss_linear(std::shared_ptr<const RegressorModel> f, const Dataset& val,
                                       bool use_embedding = true) {
  if (val.empty()) throw Error(ErrorKind::EmptyValidation, "loss-linear calibration needs validation rows");
  LinearOnFeatures model;
  if (use_embedding && f->kind() == RegressorKind::MLP) model.embedding = f;
  const Dataset losses = loss_dataset(*f, val);
  const std::size_t p = model.features(losses.row(0)).size() + 1;
  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    auto phi = model.features(losses.row(i));
    phi.push_back(1.0);
    for (std::size_t a = 0; a < p; ++a) {
      rhs[a] += phi[a] * losses.target(i);
      for (std::size_t b = 0; b < p; ++b) gram[a * p + b] += phi[a] * phi[b];
    }
  }
  for (std::size_t a = 0; a < p; ++a) gram[a * p + a] += 1e-8 * static_cast<double>(losses.size());
  auto beta = detail::solve_dense(std::move(gram), std::move(rhs));
  model.intercept = beta.back();
  beta.pop_back();
  model.coef = std::move(beta);
  return CalibratorModel(std::move(model));
}

/// Split-conformal threshold for a rejection budget gamma.
struct ConformalThreshold {
  double c_hat = std::numeric_limits<double>::infinity();
  std::size_t m = 0;
  double gamma = 0.0;
  std::size_t order_statistic_index = 0;  // 1-based

  bool accepts_everything() const noexcept { return std::isinf(c_hat); }
  friend bool operator==(const ConformalThreshold&, const ConformalThreshold&) = default;
};

/// ⌈(1 - gamma)(m + 1)⌉, snapping products within 1e-9 of an integer so
/// representation error in gamma cannot push the index up by one.
inline std::size_t conformal_index(std::size_t m, double gamma) {
  const double raw = (1.0 - gamma) * static_cast<double>(m + 1);
  const double nearest = std::round(raw);
  const double idx = std::abs(raw - nearest) <= 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
  return static_cast<std::size_t>(std::max(1.0, idx));
}

/// ĉ is the ⌈(1-gamma)(m+1)⌉-th smallest score, or +inf when that index
/// exceeds m. The scores must come from samples independent of the regressor.
inline ConformalThreshold conformal_threshold(std::span<const double> scores, double gamma) {
  if (scores.empty()) throw Error(ErrorKind::EmptyScores, "conformal threshold needs calibration scores");
  require(gamma > 0.0 && gamma < 1.0, ErrorKind::InvalidArgument, "budget gamma must lie in (0, 1)");
  ConformalThreshold t;
  t.m = scores.size();
  t.gamma = gamma;
  t.order_statistic_index = conformal_index(t.m, gamma);
  if (t.order_statistic_index > t.m) return t;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end());
  t.c_hat = sorted[t.order_statistic_index - 1];
  return t;
}

inline std::vector<double> calibrator_scores(const CalibratorModel& calibrator, const Dataset& data) {
  std::vector<double> s(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) s[i] = calibrator.estimate(data.row(i));
  return s;
}

inline RejectorModel conformal_rejector(std::shared_ptr<const CalibratorModel> calibrator,
                                        const ConformalThreshold& threshold) {
  return RejectorModel::conformal(std::move(calibrator), threshold.c_hat);
}

struct RegressorRejectorPair {
  RegressorModel regressor;
  RejectorModel rejector;
};

/// f*(x) = f̄(x), r*(x) = 1{v(x) <= c}, as lookup tables over a discrete support.
inline RegressorRejectorPair oracle_bayes_pair(const SyntheticTask& task, double c) {
  if (!task.is_discrete())
    throw Error(ErrorKind::UnsupportedTask, "the Bayes pair is tabulated only for discrete tasks");
  std::vector<double> pts(task.support_points().begin(), task.support_points().end());
  std::vector<double> values;
  std::vector<int> accept;
  for (const auto& n : task.nodes()) {
    values.push_back(n.mean);
    accept.push_back(n.var <= c ? 1 : 0);
  }
  return {RegressorModel::table(task.dim(), pts, std::move(values)), RejectorModel::table(task.dim(), pts, accept)};
}

/// Binary classification with rejection: the plug-in classifier
/// 1{eta >= 0.5} and the rejector thresholding its conditional 0-1 risk
/// min(eta, 1 - eta) at c (ties accept).
struct ClassificationWithRejection {
  RegressorModel classifier;
  RejectorModel rejector;
  std::vector<double> conditional_risk;
  double rwr_risk = 0.0;
};

/// E[r(X) P(f(X) != Y | X) + (1 - r(X)) c] by enumeration.
inline double binary_rwr_risk(const BinaryTask& task, const RegressorModel& classifier, const RejectorModel& rejector,
                              double c) {
  task.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < task.size(); ++i) {
    std::span<const double> x(task.points.data() + i * task.dim, task.dim);
    const double label = classifier.predict(x) >= 0.5 ? 1.0 : 0.0;
    const double err = label == 1.0 ? 1.0 - task.eta[i] : task.eta[i];
    s += task.weights[i] * (rejector.accept(x) ? err : c);
  }
  return s;
}

inline ClassificationWithRejection classify_with_rejection(const BinaryTask& task, double c) {
  task.validate();
  require(c >= 0.0, ErrorKind::InvalidArgument, "deferral cost must be nonnegative");
  std::vector<double> labels;
  std::vector<int> accept;
  std::vector<double> risk;
  for (double e : task.eta) {
    const double label = e >= 0.5 ? 1.0 : 0.0;
    labels.push_back(label);
    risk.push_back(label == 1.0 ? 1.0 - e : e);
    accept.push_back(risk.back() <= c ? 1 : 0);
  }
  ClassificationWithRejection out{RegressorModel::table(task.dim, task.points, std::move(labels)),
                                  RejectorModel::table(task.dim, task.points, std::move(accept)), std::move(risk),
                                  0.0};
  out.rwr_risk = binary_rwr_risk(task, out.classifier, out.rejector, c);
  return out;
}

}  // namespace rwr
