#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rwr/error.hpp"
#include "rwr/rng.hpp"

namespace rwr {

/// Dense row-major feature matrix with a target vector.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t n, std::size_t d, std::vector<double> features, std::vector<double> targets,
          std::vector<std::string> feature_names = {})
      : n_(n), d_(d), features_(std::move(features)), targets_(std::move(targets)),
        feature_names_(std::move(feature_names)) {
    validate();
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const double> row(std::size_t i) const { return {features_.data() + i * d_, d_}; }
  double target(std::size_t i) const { return targets_[i]; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<double>& targets() const noexcept { return targets_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// Rows in the given order; indices may repeat.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(indices.size() * d_);
    y.reserve(indices.size());
    for (std::size_t i : indices) {
      require(i < n_, ErrorKind::InvalidArgument, "subset index out of range");
      auto r = row(i);
      x.insert(x.end(), r.begin(), r.end());
      y.push_back(targets_[i]);
    }
    return Dataset(indices.size(), d_, std::move(x), std::move(y), feature_names_, unchecked{});
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  struct unchecked {};
  Dataset(std::size_t n, std::size_t d, std::vector<double> x, std::vector<double> y,
          std::vector<std::string> names, unchecked)
      : n_(n), d_(d), features_(std::move(x)), targets_(std::move(y)), feature_names_(std::move(names)) {}

  void validate() const {
    require(d_ >= 1, ErrorKind::InvalidArgument, "dataset needs at least one feature column");
    require(features_.size() == n_ * d_, ErrorKind::InvalidArgument, "feature buffer size != n*d");
    require(targets_.size() == n_, ErrorKind::InvalidArgument, "targets length != row count");
    require(feature_names_.empty() || feature_names_.size() == d_, ErrorKind::InvalidArgument,
            "feature_names length != d");
    for (double v : features_) require(std::isfinite(v), ErrorKind::InvalidArgument, "non-finite feature");
    for (double v : targets_) require(std::isfinite(v), ErrorKind::InvalidArgument, "non-finite target");
  }

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> features_;
  std::vector<double> targets_;
  std::vector<std::string> feature_names_;
};

struct SplitSpec {
  double train_fraction = 0.7;
  double val_fraction = 0.2;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train_fraction, val_fraction, test_fraction})
      require(f > 0.0 && f < 1.0, ErrorKind::InvalidArgument, "split fractions must lie in (0,1)");
    require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) <= 1e-9, ErrorKind::InvalidArgument,
            "split fractions must sum to 1");
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded permutation cut into floor-sized val/test blocks; leftover rows go to train.
inline SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n) + 1e-9));
  const auto n_train_floor =
      static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
  if (n_val == 0 || n_test == 0 || n_train_floor == 0)
    throw Error(ErrorKind::EmptySplit, "n=" + std::to_string(n) + " leaves a split without rows");
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(RngHandle{spec.seed, streams::kSplit});
  rng.shuffle(std::span<std::size_t>(perm));

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return out;
}

inline std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& data, const SplitSpec& spec) {
  auto idx = split_indices(data.size(), spec);
  return {data.subset(idx.train), data.subset(idx.val), data.subset(idx.test)};
}

/// Per-column affine map fitted on a training set. Degenerate (zero
/// variance) columns keep mean 0 / scale 1 so they pass through unchanged.
struct ScalingParams {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<bool> degenerate;
  double target_mean = 0.0;
  double target_scale = 1.0;
  bool scale_targets = false;

  double transform_target(double y) const { return scale_targets ? (y - target_mean) / target_scale : y; }
  double inverse_target(double y) const { return scale_targets ? y * target_scale + target_mean : y; }

  std::vector<double> transform_row(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - feature_mean[j]) / feature_scale[j];
    return out;
  }

  Dataset apply(const Dataset& data) const {
    require(data.dim() == feature_mean.size(), ErrorKind::InvalidArgument, "dimension mismatch in scaling");
    std::vector<double> x(data.features());
    const std::size_t d = data.dim();
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) x[i * d + j] = (x[i * d + j] - feature_mean[j]) / feature_scale[j];
    std::vector<double> y(data.targets());
    for (double& v : y) v = transform_target(v);
    return Dataset(data.size(), d, std::move(x), std::move(y), data.feature_names());
  }

  friend bool operator==(const ScalingParams&, const ScalingParams&) = default;
};

namespace detail {
inline std::pair<double, double> mean_and_sample_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}
}  // namespace detail

inline ScalingParams fit_scaling(const Dataset& train, bool scale_targets) {
  require(train.size() >= 2, ErrorKind::InvalidArgument, "standardization needs at least two rows");
  const std::size_t d = train.dim();
  ScalingParams p;
  p.feature_mean.assign(d, 0.0);
  p.feature_scale.assign(d, 1.0);
  p.degenerate.assign(d, false);
  std::vector<double> column(train.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < train.size(); ++i) column[i] = train.row(i)[j];
    auto [mean, sd] = detail::mean_and_sample_std(column);
    if (sd > 0.0 && std::isfinite(sd)) {
      p.feature_mean[j] = mean;
      p.feature_scale[j] = sd;
    } else {
      p.degenerate[j] = true;
    }
  }
  if (scale_targets) {
    auto [mean, sd] = detail::mean_and_sample_std(train.targets());
    if (sd > 0.0) {
      p.scale_targets = true;
      p.target_mean = mean;
      p.target_scale = sd;
    }
  }
  return p;
}

struct Standardized {
  Dataset train;
  std::vector<Dataset> others;
  ScalingParams params;
};

/// z-scores train columns (sample std) and applies the same map to `others`.
inline Standardized standardize(const Dataset& train, const std::vector<Dataset>& others,
                                bool scale_targets = false) {
  Standardized out;
  out.params = fit_scaling(train, scale_targets);
  out.train = out.params.apply(train);
  out.others.reserve(others.size());
  for (const auto& o : others) out.others.push_back(out.params.apply(o));
  return out;
}

}  // namespace rwr
