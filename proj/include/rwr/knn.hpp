#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rng.hpp"
#include "rwr/select.hpp"

namespace rwr {

struct KnnConfig {
  std::size_t k = 10;
  std::vector<std::size_t> k_grid{5, 10, 15, 20, 30, 50, 70, 100, 150};
  std::size_t cv_folds = 10;

  void validate() const {
    require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
    for (auto g : k_grid) require(g >= 1, ErrorKind::InvalidArgument, "k grid entries must be positive");
  }

  friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

inline RegressorModel fit_knn(const Dataset& train, const KnnConfig& cfg) {
  cfg.validate();
  require(!train.empty(), ErrorKind::EmptyDataset, "kNN needs training rows");
  if (cfg.k > train.size())
    throw Error(ErrorKind::KTooLarge,
                "k=" + std::to_string(cfg.k) + " exceeds n_train=" + std::to_string(train.size()));
  return RegressorModel(KnnModel{cfg.k, train});
}

/// Grid entries usable with n training rows, ascending. Entries above n are dropped.
inline std::vector<std::size_t> usable_k_grid(std::span<const std::size_t> grid, std::size_t n) {
  std::vector<std::size_t> out;
  for (auto k : grid)
    if (k >= 1 && k <= n) out.push_back(k);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

/// Accumulates the held-out squared error of every k in `ks` for queries in
/// `held_out` against `pool`, sharing one neighbour sort per query.
inline void accumulate_knn_errors(const Dataset& pool, const Dataset& held_out, std::span<const std::size_t> ks,
                                  std::vector<double>& sse) {
  const std::size_t kmax = ks.back();
  for (std::size_t q = 0; q < held_out.size(); ++q) {
    const auto nn = nearest_neighbors(pool, held_out.row(q), kmax);
    double running = 0.0;
    std::size_t next = 0;
    for (std::size_t j = 0; j < nn.size() && next < ks.size(); ++j) {
      running += pool.target(nn[j]);
      while (next < ks.size() && ks[next] == j + 1) {
        const double err = running / static_cast<double>(j + 1) - held_out.target(q);
        sse[next] += err * err;
        ++next;
      }
    }
  }
}

}  // namespace detail

/// k minimizing validation squared loss; ties go to the smaller k.
inline std::size_t select_knn_k(const Dataset& train, const Dataset& val, std::span<const std::size_t> grid) {
  auto ks = usable_k_grid(grid, train.size());
  require(!ks.empty(), ErrorKind::InvalidArgument, "no usable k in grid");
  require(!val.empty(), ErrorKind::EmptyValidation, "validation set is empty");
  std::vector<double> sse(ks.size(), 0.0);
  detail::accumulate_knn_errors(train, val, ks, sse);
  return ks[argmin_first(sse)];
}

/// k chosen by `folds`-fold cross-validation on `train`; fold assignment is a
/// seeded permutation. Grid entries above the smallest fold-training size are dropped.
inline std::size_t cv_select_knn_k(const Dataset& train, std::span<const std::size_t> grid, std::size_t folds,
                                   RngHandle rng_handle) {
  const std::size_t n = train.size();
  require(folds >= 2 && folds <= n, ErrorKind::InvalidArgument, "fold count must lie in [2, n]");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(rng_handle);
  rng.shuffle(std::span<std::size_t>(perm));

  const std::size_t largest_fold = (n + folds - 1) / folds;
  auto ks = usable_k_grid(grid, n - largest_fold);
  require(!ks.empty(), ErrorKind::InvalidArgument, "no usable k in grid for cross-validation");
  std::vector<double> sse(ks.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < n; ++i) (i % folds == f ? out : in).push_back(perm[i]);
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    detail::accumulate_knn_errors(train.subset(in), train.subset(out), ks, sse);
  }
  return ks[argmin_first(sse)];
}

}  // namespace rwr
