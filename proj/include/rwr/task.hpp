#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/distance.hpp"
#include "rwr/error.hpp"
#include "rwr/rng.hpp"

namespace rwr {

enum class SupportKind { DiscreteGrid, Continuous1D };
enum class NoiseFamily { TwoPoint, Gaussian };

/// One atom of the marginal of X: an exact support point for discrete
/// tasks, a quadrature node for continuous ones.
struct TaskNode {
  std::vector<double> x;
  double weight = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t order) {
  std::vector<double> nodes(order), weights(order);
  const double n = static_cast<double>(order);
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[order - 1 - i] = x;
    weights[i] = weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return {nodes, weights};
}

}  // namespace detail

/// A distribution over (X, Y) whose conditional mean and variance are known
/// in closed form, so every population loss can be evaluated exactly
/// (discrete support) or by fixed quadrature (1-D continuous support).
class SyntheticTask {
 public:
  using ScalarFn = std::function<double(double)>;

  /// For continuous tasks: the named base task and the accumulated affine
  /// change of coordinates x = (x_base - x_shift) / x_scale (same for y).
  struct Provenance {
    std::string base;
    double x_shift = 0.0;
    double x_scale = 1.0;
    double y_shift = 0.0;
    double y_scale = 1.0;
  };

  static SyntheticTask discrete(std::string name, std::size_t dim, std::vector<double> points,
                                std::vector<double> weights, std::vector<double> means, std::vector<double> vars,
                                NoiseFamily noise = NoiseFamily::TwoPoint) {
    const std::size_t m = weights.size();
    require(m >= 1, ErrorKind::InvalidArgument, "discrete task needs a nonempty support");
    require(dim >= 1 && points.size() == m * dim && means.size() == m && vars.size() == m,
            ErrorKind::InvalidArgument, "discrete task buffers disagree in size");
    double total = 0.0;
    for (double w : weights) {
      require(w >= 0.0, ErrorKind::InvalidArgument, "negative support weight");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::InvalidArgument, "support weights must sum to 1");
    for (double v : vars) require(v >= 0.0, ErrorKind::InvalidArgument, "negative conditional variance");

    SyntheticTask t;
    t.name_ = std::move(name);
    t.support_ = SupportKind::DiscreteGrid;
    t.noise_ = noise;
    t.dim_ = dim;
    t.points_ = std::move(points);
    t.nodes_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      TaskNode node;
      node.x.assign(t.points_.begin() + static_cast<std::ptrdiff_t>(i * dim),
                    t.points_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      node.weight = weights[i];
      node.mean = means[i];
      node.var = vars[i];
      t.nodes_.push_back(std::move(node));
    }
    return t;
  }

  /// X ~ Uniform[lo, hi]; expectations use composite Gauss-Legendre
  /// quadrature with `panels` panels of `order` nodes each.
  static SyntheticTask continuous_1d(std::string name, double lo, double hi, ScalarFn mean, ScalarFn var,
                                     NoiseFamily noise = NoiseFamily::Gaussian, std::size_t panels = 64,
                                     std::size_t order = 8) {
    require(hi > lo, ErrorKind::InvalidArgument, "continuous task needs lo < hi");
    require(static_cast<bool>(mean) && static_cast<bool>(var), ErrorKind::InvalidArgument,
            "continuous task needs mean and variance functions");
    SyntheticTask t;
    t.name_ = std::move(name);
    t.support_ = SupportKind::Continuous1D;
    t.noise_ = noise;
    t.dim_ = 1;
    t.lo_ = lo;
    t.hi_ = hi;
    t.mean_fn_ = std::move(mean);
    t.var_fn_ = std::move(var);
    t.panels_ = panels;
    t.order_ = order;
    t.provenance_.base = t.name_;
    t.build_quadrature();
    return t;
  }

  const std::string& name() const noexcept { return name_; }
  SupportKind support() const noexcept { return support_; }
  NoiseFamily noise() const noexcept { return noise_; }
  std::size_t dim() const noexcept { return dim_; }
  bool is_discrete() const noexcept { return support_ == SupportKind::DiscreteGrid; }
  std::size_t support_size() const noexcept { return nodes_.size(); }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  std::size_t panels() const noexcept { return panels_; }
  std::size_t order() const noexcept { return order_; }

  /// Atoms (discrete) or quadrature nodes (continuous); weights sum to 1.
  const std::vector<TaskNode>& nodes() const noexcept { return nodes_; }

  /// Row-major support points of a discrete task.
  std::span<const double> support_points() const noexcept { return points_; }

  std::size_t nearest_node(std::span<const double> x) const { return nearest_row(points_, dim_, x); }

  double cond_mean(std::span<const double> x) const {
    if (is_discrete()) return nodes_[nearest_node(x)].mean;
    return mean_fn_(x[0]);
  }

  double cond_var(std::span<const double> x) const {
    if (is_discrete()) return nodes_[nearest_node(x)].var;
    return var_fn_(x[0]);
  }

  double min_var() const {
    double m = nodes_.front().var;
    for (const auto& n : nodes_) m = std::min(m, n.var);
    return m;
  }

  double max_var() const {
    double m = nodes_.front().var;
    for (const auto& n : nodes_) m = std::max(m, n.var);
    return m;
  }

  std::vector<double> draw_x(Rng& rng) const {
    if (is_discrete()) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t pick = nodes_.size() - 1;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        acc += nodes_[i].weight;
        if (u < acc) {
          pick = i;
          break;
        }
      }
      return nodes_[pick].x;
    }
    return {rng.uniform(lo_, hi_)};
  }

  double draw_y(std::span<const double> x, Rng& rng) const {
    const double m = cond_mean(x);
    const double sd = std::sqrt(cond_var(x));
    if (noise_ == NoiseFamily::TwoPoint) return rng.bernoulli(0.5) ? m + sd : m - sd;
    return m + sd * rng.normal();
  }

  Dataset sample(std::size_t n, Rng& rng) const {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(n * dim_);
    ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = draw_x(rng);
      ys.push_back(draw_y(x, rng));
      xs.insert(xs.end(), x.begin(), x.end());
    }
    return Dataset(n, dim_, std::move(xs), std::move(ys));
  }

  /// The same distribution expressed in the coordinates produced by
  /// `scaling` (features and, if enabled, targets).
  SyntheticTask transformed(const ScalingParams& scaling) const {
    require(scaling.feature_mean.size() == dim_, ErrorKind::InvalidArgument, "scaling dimension mismatch");
    const double ty_mean = scaling.scale_targets ? scaling.target_mean : 0.0;
    const double ty_scale = scaling.scale_targets ? scaling.target_scale : 1.0;
    if (is_discrete()) {
      std::vector<double> pts(points_.size());
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        for (std::size_t j = 0; j < dim_; ++j)
          pts[i * dim_ + j] = (points_[i * dim_ + j] - scaling.feature_mean[j]) / scaling.feature_scale[j];
      std::vector<double> w, mu, var;
      for (const auto& n : nodes_) {
        w.push_back(n.weight);
        mu.push_back((n.mean - ty_mean) / ty_scale);
        var.push_back(n.var / (ty_scale * ty_scale));
      }
      return discrete(name_, dim_, std::move(pts), std::move(w), std::move(mu), std::move(var), noise_);
    }
    const double fx_mean = scaling.feature_mean[0];
    const double fx_scale = scaling.feature_scale[0];
    auto mean_fn = mean_fn_;
    auto var_fn = var_fn_;
    auto out = continuous_1d(
        name_, (lo_ - fx_mean) / fx_scale, (hi_ - fx_mean) / fx_scale,
        [=](double x) { return (mean_fn(x * fx_scale + fx_mean) - ty_mean) / ty_scale; },
        [=](double x) { return var_fn(x * fx_scale + fx_mean) / (ty_scale * ty_scale); }, noise_, panels_, order_);
    out.provenance_ = provenance_;
    out.provenance_.x_shift = provenance_.x_shift + fx_mean * provenance_.x_scale;
    out.provenance_.x_scale = provenance_.x_scale * fx_scale;
    out.provenance_.y_shift = provenance_.y_shift + ty_mean * provenance_.y_scale;
    out.provenance_.y_scale = provenance_.y_scale * ty_scale;
    return out;
  }

 private:
  void build_quadrature() {
    auto [gx, gw] = detail::gauss_legendre(order_);
    const double width = (hi_ - lo_) / static_cast<double>(panels_);
    points_.clear();
    nodes_.clear();
    for (std::size_t p = 0; p < panels_; ++p) {
      const double a = lo_ + width * static_cast<double>(p);
      for (std::size_t q = 0; q < order_; ++q) {
        const double x = a + 0.5 * width * (gx[q] + 1.0);
        TaskNode node;
        node.x = {x};
        node.weight = 0.5 * width * gw[q] / (hi_ - lo_);
        node.mean = mean_fn_(x);
        node.var = var_fn_(x);
        points_.push_back(x);
        nodes_.push_back(std::move(node));
      }
    }
  }

  std::string name_;
  SupportKind support_ = SupportKind::DiscreteGrid;
  NoiseFamily noise_ = NoiseFamily::TwoPoint;
  std::size_t dim_ = 1;
  std::vector<double> points_;
  std::vector<TaskNode> nodes_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  ScalarFn mean_fn_;
  ScalarFn var_fn_;
  std::size_t panels_ = 0;
  std::size_t order_ = 0;
  Provenance provenance_;
};

namespace tasks {

/// Six equiprobable points x = 0..5 with v = (0.25, 0.5, 1, 2, 4, 9) and
/// f̄(x) = sin(x); two-point noise makes the moments exact.
inline SyntheticTask grid6() {
  std::vector<double> pts{0, 1, 2, 3, 4, 5};
  std::vector<double> w(6, 1.0 / 6.0);
  std::vector<double> mu;
  for (double x : pts) mu.push_back(std::sin(x));
  return SyntheticTask::discrete("grid6", 1, pts, w, mu, {0.25, 0.5, 1.0, 2.0, 4.0, 9.0});
}

/// X ~ U[-1, 1], f̄(x) = sin(pi x), v(x) = 0.02 + 2 x^4, Gaussian noise.
inline SyntheticTask hetero1d() {
  return SyntheticTask::continuous_1d(
      "hetero1d", -1.0, 1.0, [](double x) { return std::sin(std::numbers::pi * x); },
      [](double x) { return 0.02 + 2.0 * x * x * x * x; });
}

/// Random discrete task: support size in [2, max_support], 1-D points
/// 0..m-1, Dirichlet(1) weights, means in [-2, 2], variances in [0, var_max].
inline SyntheticTask random_discrete(Rng& rng, std::size_t max_support = 8, double var_max = 6.0) {
  const std::size_t m = 2 + rng.below(max_support - 1);
  std::vector<double> pts(m), w(m), mu(m), var(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    pts[i] = static_cast<double>(i);
    w[i] = -std::log(1.0 - rng.uniform());
    total += w[i];
    mu[i] = rng.uniform(-2.0, 2.0);
    var[i] = rng.uniform(0.0, var_max);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    w[i] /= total;
    acc += w[i];
  }
  w[m - 1] = 1.0 - acc;
  return SyntheticTask::discrete("random", 1, pts, w, mu, var);
}

inline std::vector<std::string> names() { return {"grid6", "hetero1d"}; }

inline bool is_known(const std::string& name) { return name == "grid6" || name == "hetero1d"; }

inline SyntheticTask by_name(const std::string& name) {
  if (name == "grid6") return grid6();
  if (name == "hetero1d") return hetero1d();
  throw Error(ErrorKind::UnsupportedTask, "unknown synthetic task '" + name + "'");
}

}  // namespace tasks

/// Binary-label task on a discrete support: eta(x) = P(Y = 1 | X = x).
struct BinaryTask {
  std::size_t dim = 1;
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<double> eta;

  std::size_t size() const noexcept { return weights.size(); }

  void validate() const {
    require(!weights.empty() && points.size() == weights.size() * dim && eta.size() == weights.size(),
            ErrorKind::UnsupportedTask, "binary task buffers disagree in size");
    double total = 0.0;
    for (double w : weights) total += w;
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::UnsupportedTask, "binary task weights must sum to 1");
    for (double e : eta) require(e >= 0.0 && e <= 1.0, ErrorKind::UnsupportedTask, "eta outside [0, 1]");
  }
};

}  // namespace rwr
