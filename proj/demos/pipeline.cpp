// Two-step pipeline on a heteroscedastic task: fit kNN on all training
// data, then learn the rejector by kernel calibration of its loss.

#include <cstdio>

#include "rwr/harness/experiment.hpp"
#include "rwr/knn.hpp"
#include "rwr/losses.hpp"
#include "rwr/rejection.hpp"
#include "rwr/task.hpp"

int main() {
  const auto task = rwr::tasks::hetero1d();
  rwr::Rng rng(rwr::RngHandle{7, rwr::streams::kSample});
  const auto data = task.sample(1000, rng);
  rwr::SplitSpec split;
  split.seed = 7;
  const auto [train, val, test] = rwr::split_dataset(data, split);

  rwr::KnnConfig knn;
  knn.k = rwr::cv_select_knn_k(train, knn.k_grid, knn.cv_folds, rwr::RngHandle{7, rwr::streams::kFolds});
  const auto f = rwr::fit_knn(train, knn);
  std::printf("k = %zu, test mse %.4f\n\n", knn.k, rwr::empirical_squared_loss(f, test));

  const auto [inner, outer] = rwr::harness::detail::halves(val);
  std::printf("   c   sigma   rwr loss  rejected  machine loss\n");
  for (double c : {0.1, 0.25, 0.5, 1.0}) {
    const auto kernel = rwr::select_bandwidth(f, inner, outer, rwr::KernelSpec{}, c);
    const auto r = rwr::induce_rejector(rwr::kernel_calibrate(f, val, kernel), c);
    const auto rep = rwr::empirical_rwr_loss(f, r, test, c);
    std::printf("%5.2f %7.3g  %8.4f  %8.3f  %12.4f\n", c, kernel.length_scale_sigma, rep.rwr_loss, rep.rejection_rate,
                rep.machine_loss);
  }
}
