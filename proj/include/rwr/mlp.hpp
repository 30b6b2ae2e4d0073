#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rng.hpp"

namespace rwr {

struct MlpConfig {
  std::size_t hidden_width = 64;
  double learning_rate = 5e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  RngHandle init_seed{0, streams::kModel};

  void validate() const {
    require(hidden_width >= 1 && batch_size >= 1 && epochs >= 1, ErrorKind::InvalidArgument,
            "MLP sizes and epochs must be positive");
    require(learning_rate > 0.0 && weight_decay >= 0.0, ErrorKind::InvalidArgument,
            "learning rate must be positive and weight decay nonnegative");
  }

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Glorot-uniform weights, zero biases.
inline MlpModel init_mlp(std::size_t input_dim, const MlpConfig& cfg) {
  cfg.validate();
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden = cfg.hidden_width;
  m.w1.resize(m.hidden * input_dim);
  m.b1.assign(m.hidden, 0.0);
  m.w2.resize(m.hidden);
  m.b2 = 0.0;
  Rng rng(cfg.init_seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + m.hidden));
  const double a2 = std::sqrt(6.0 / static_cast<double>(m.hidden + 1));
  for (double& w : m.w1) w = rng.uniform(-a1, a1);
  for (double& w : m.w2) w = rng.uniform(-a2, a2);
  return m;
}

namespace detail {

/// Mean squared loss over `rows` of `data` and its gradient (same layout as
/// MlpModel::flatten) accumulated into `grad`.
inline double mlp_loss_and_grad(const MlpModel& m, const Dataset& data, std::span<const std::size_t> rows,
                                std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t d = m.input_dim;
  const std::size_t h = m.hidden;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * d;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + h;
  std::vector<double> z(h);
  const double inv_b = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t i : rows) {
    auto x = data.row(i);
    double out = m.b2;
    for (std::size_t u = 0; u < h; ++u) {
      double zu = m.b1[u];
      const double* w = m.w1.data() + u * d;
      for (std::size_t j = 0; j < d; ++j) zu += w[j] * x[j];
      z[u] = zu;
      if (zu > 0.0) out += m.w2[u] * zu;
    }
    const double resid = out - data.target(i);
    loss += resid * resid * inv_b;
    const double d_out = 2.0 * resid * inv_b;
    *g_b2 += d_out;
    for (std::size_t u = 0; u < h; ++u) {
      if (z[u] <= 0.0) continue;
      g_w2[u] += d_out * z[u];
      const double dz = d_out * m.w2[u];
      g_b1[u] += dz;
      double* gw = g_w1 + u * d;
      for (std::size_t j = 0; j < d; ++j) gw[j] += dz * x[j];
    }
  }
  return loss;
}

}  // namespace detail

/// One-hidden-layer ReLU regressor trained on every training row by
/// mini-batch Adam with decoupled weight decay on the mean squared loss.
/// Deterministic given cfg.init_seed.
inline RegressorModel fit_mlp(const Dataset& train, const MlpConfig& cfg) {
  cfg.validate();
  require(!train.empty(), ErrorKind::EmptyDataset, "MLP needs training rows");
  MlpModel model = init_mlp(train.dim(), cfg);
  std::vector<double> params = model.flatten();
  std::vector<double> grad(params.size()), m1(params.size(), 0.0), m2(params.size(), 0.0);
  const std::size_t batch = std::min(cfg.batch_size, train.size());

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffler(cfg.init_seed.with_stream(cfg.init_seed.stream_id + 1000));
  double b1_pow = 1.0, b2_pow = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      model.unflatten(params);
      const double loss = detail::mlp_loss_and_grad(model, train, rows, grad);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::NonFiniteLoss, "training loss diverged at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(rows.size());
      b1_pow *= cfg.beta1;
      b2_pow *= cfg.beta2;
      for (std::size_t p = 0; p < params.size(); ++p) {
        m1[p] = cfg.beta1 * m1[p] + (1.0 - cfg.beta1) * grad[p];
        m2[p] = cfg.beta2 * m2[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
        const double mhat = m1[p] / (1.0 - b1_pow);
        const double vhat = m2[p] / (1.0 - b2_pow);
        params[p] -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.epsilon) + cfg.weight_decay * params[p]);
      }
    }
    if (!std::isfinite(epoch_loss))
      throw Error(ErrorKind::NonFiniteLoss, "training loss diverged at epoch " + std::to_string(epoch));
  }
  model.unflatten(params);
  return RegressorModel(std::move(model));
}

struct LayerGradError {
  std::string name;
  double max_relative_error = 0.0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  bool all_finite = true;
  std::vector<LayerGradError> layers;  // w1, b1, w2, b2
};

/// Compares backpropagated gradients of the probe MSE against central finite
/// differences (step 1e-5) at the initialization given by cfg.init_seed.
/// Relative error is |a - n| / max(|a|, |n|, 1e-7).
inline GradientCheckReport gradient_check(const MlpConfig& cfg, const Dataset& probe, double step = 1e-5) {
  require(!probe.empty(), ErrorKind::EmptyDataset, "gradient check needs probe rows");
  MlpModel model = init_mlp(probe.dim(), cfg);
  // Nonzero biases so the check also exercises the b1 path away from kinks.
  Rng rng(cfg.init_seed.with_stream(cfg.init_seed.stream_id + 2000));
  for (double& b : model.b1) b = rng.uniform(-0.5, 0.5);
  model.b2 = rng.uniform(-0.5, 0.5);

  std::vector<std::size_t> rows(probe.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const std::vector<double> base = model.flatten();
  std::vector<double> analytic(base.size());
  detail::mlp_loss_and_grad(model, probe, rows, analytic);

  const std::size_t h = model.hidden, d = model.input_dim;
  const std::array<std::pair<const char*, std::size_t>, 4> layout{
      {{"w1", h * d}, {"b1", h}, {"w2", h}, {"b2", 1}}};
  GradientCheckReport report;
  std::vector<double> scratch(base.size());
  MlpModel probe_model = model;
  std::size_t offset = 0;
  for (const auto& [name, count] : layout) {
    LayerGradError layer{name, 0.0};
    for (std::size_t p = offset; p < offset + count; ++p) {
      std::vector<double> shifted = base;
      shifted[p] = base[p] + step;
      probe_model.unflatten(shifted);
      const double up = detail::mlp_loss_and_grad(probe_model, probe, rows, scratch);
      shifted[p] = base[p] - step;
      probe_model.unflatten(shifted);
      const double down = detail::mlp_loss_and_grad(probe_model, probe, rows, scratch);
      const double numeric = (up - down) / (2.0 * step);
      if (!std::isfinite(numeric) || !std::isfinite(analytic[p])) report.all_finite = false;
      const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-7});
      layer.max_relative_error = std::max(layer.max_relative_error, std::abs(analytic[p] - numeric) / denom);
    }
    report.max_relative_error = std::max(report.max_relative_error, layer.max_relative_error);
    report.layers.push_back(layer);
    offset += count;
  }
  return report;
}

}  // namespace rwr
