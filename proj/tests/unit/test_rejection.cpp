#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "helpers.hpp"
#include "rwr/losses.hpp"
#include "rwr/oracle.hpp"
#include "rwr/rejection.hpp"
#include "rwr/task.hpp"
#include "rwr/verify.hpp"

using namespace rwr;
using rwr::testing::make_1d;
using rwr::testing::pt;
using rwr::testing::two_point_task;

namespace {

KernelSpec with_sigma(double s) {
  KernelSpec k;
  k.length_scale_sigma = s;
  return k;
}

std::pair<Dataset, Dataset> halves(const Dataset& d) {
  std::vector<std::size_t> first(d.size() / 2), second(d.size() - d.size() / 2);
  std::iota(first.begin(), first.end(), std::size_t{0});
  std::iota(second.begin(), second.end(), first.size());
  return {d.subset(first), d.subset(second)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(KernelCalibrate, SinglePointGivesItsLoss) {
  const auto f = RegressorModel::constant(0);
  const auto cal = kernel_calibrate(f, make_1d({0.5}, {3}), with_sigma(1.0));
  for (double x : {-10.0, 0.5, 2.0}) EXPECT_DOUBLE_EQ(cal.estimate(pt(x)), 9.0);
}

TEST(KernelCalibrate, SmallBandwidthLocalizes) {
  const auto f = RegressorModel::constant(0);
  const auto cal = kernel_calibrate(f, make_1d({0, 1, 2}, {1, 2, 3}), with_sigma(1e-6));
  const double x0 = 0, x1 = 1, x2 = 2;
  EXPECT_NEAR(cal.estimate(pt(x0)), 1.0, 1e-12);
  EXPECT_NEAR(cal.estimate(pt(x1)), 4.0, 1e-12);
  EXPECT_NEAR(cal.estimate(pt(x2)), 9.0, 1e-12);
}

TEST(KernelCalibrate, SymmetricWeightsAverage) {
  const auto f = RegressorModel::constant(0);
  const auto cal = kernel_calibrate(f, make_1d({0, 2}, {1, 3}), with_sigma(1.0));
  const double q = 1.0;
  EXPECT_DOUBLE_EQ(cal.estimate(pt(q)), 5.0);
}

TEST(KernelCalibrate, UnderflowFallsBackToNearestPoint) {
  const auto f = RegressorModel::constant(0);
  const auto cal = kernel_calibrate(f, make_1d({0, 10}, {1, 2}), with_sigma(1e-3));
  const double q = 6.0;
  EXPECT_DOUBLE_EQ(cal.estimate(pt(q)), 4.0);
}

TEST(KernelCalibrate, EmptyValidation) {
  try {
    kernel_calibrate(RegressorModel::constant(0), Dataset{}, KernelSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyValidation);
  }
}

TEST(SelectBandwidth, SingletonGrid) {
  KernelSpec k;
  k.bandwidth_grid = {0.1};
  const auto d = make_1d({0, 1, 2, 3}, {0, 1, 0, 2});
  EXPECT_EQ(select_bandwidth(RegressorModel::constant(0), d, d, k, 1.0).length_scale_sigma, 0.1);
}

TEST(SelectBandwidth, ArgminMatchesDirectEvaluation) {
  const auto task = tasks::hetero1d();
  Rng rng(RngHandle{11, 0});
  const auto inner = task.sample(200, rng), outer = task.sample(200, rng);
  const auto f = RegressorModel::constant(0);
  const double c = 1.0;
  KernelSpec k;
  k.bandwidth_grid = {1e-3, 1e3};
  std::vector<double> loss;
  for (double s : k.bandwidth_grid)
    loss.push_back(empirical_rwr_loss(f, induce_rejector(kernel_calibrate(f, inner, with_sigma(s)), c), outer, c).rwr_loss);
  const double expected = loss[1] < loss[0] ? 1e3 : 1e-3;
  EXPECT_EQ(select_bandwidth(f, inner, outer, k, c).length_scale_sigma, expected);
}

TEST(SelectBandwidth, EqualLossesPickSmallestSigma) {
  // Constant losses make every bandwidth produce the same rejector.
  KernelSpec k;
  k.bandwidth_grid = {10.0, 0.01, 1.0};
  const auto d = make_1d({0, 1, 2, 3}, {1, 1, 1, 1});
  EXPECT_EQ(select_bandwidth(RegressorModel::constant(0), d, d, k, 2.0).length_scale_sigma, 0.01);
  EXPECT_EQ(select_bandwidth_by_fit(RegressorModel::constant(0), d, d, k).length_scale_sigma, 0.01);
}

TEST(InduceRejector, ZeroEstimateAcceptsAll) {
  const auto r = induce_rejector(CalibratorModel::table(1, {0, 1}, {0, 0}), 0.5);
  const double x0 = 0, x1 = 1;
  EXPECT_EQ(r.accept(pt(x0)), 1);
  EXPECT_EQ(r.accept(pt(x1)), 1);
}

TEST(InduceRejector, TieAccepts) {
  const auto r = induce_rejector(CalibratorModel::table(1, {0, 1}, {2, 2}), 2.0);
  const double x0 = 0;
  EXPECT_EQ(r.accept(pt(x0)), 1);
}

TEST(InduceRejector, OracleCalibratorMatchesBayesRule) {
  const auto task = std::make_shared<const SyntheticTask>(two_point_task());
  const auto pair = oracle_bayes_pair(*task, 2.0);
  const auto cal = CalibratorModel::oracle(task, std::make_shared<const RegressorModel>(pair.regressor));
  const auto r = induce_rejector(cal, 2.0);
  const double x0 = 0, x1 = 1;
  EXPECT_EQ(r.accept(pt(x0)), 1);
  EXPECT_EQ(r.accept(pt(x1)), 0);
  EXPECT_EQ(r.accept(pt(x0)), pair.rejector.accept(pt(x0)));
  EXPECT_EQ(r.accept(pt(x1)), pair.rejector.accept(pt(x1)));
}

TEST(InduceRejector, NegativeCostRejected) {
  EXPECT_THROW(induce_rejector(CalibratorModel::table(1, {0}, {0}), -1.0), Error);
}

TEST(Conformal, OrderStatisticFromFormula) {
  std::vector<double> s{10, 3, 7, 1, 9, 2, 8, 6, 5, 4};
  const auto t = conformal_threshold(s, 0.3);
  EXPECT_EQ(t.order_statistic_index, 8u);
  EXPECT_EQ(t.c_hat, 8.0);
  EXPECT_EQ(t.m, 10u);
}

TEST(Conformal, IndexBeyondSampleIsInfinite) {
  const auto t = conformal_threshold(std::vector<double>{1, 2, 3, 4}, 0.1);
  EXPECT_EQ(t.order_statistic_index, 5u);
  EXPECT_TRUE(t.accepts_everything());
  EXPECT_EQ(t.c_hat, std::numeric_limits<double>::infinity());
  const auto r = conformal_rejector(std::make_shared<const CalibratorModel>(CalibratorModel::table(1, {0}, {1e300})), t);
  const double x = 0;
  EXPECT_EQ(r.accept(pt(x)), 1);
}

TEST(Conformal, NearFullBudgetGivesMinimum) {
  std::vector<double> s{5, 3, 9, 1.5, 4, 8, 7, 6, 2, 10};
  const auto t = conformal_threshold(s, 0.95);
  EXPECT_EQ(t.order_statistic_index, 1u);
  EXPECT_EQ(t.c_hat, 1.5);
}

TEST(Conformal, EmptyScores) {
  try {
    conformal_threshold(std::vector<double>{}, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyScores);
  }
}

TEST(Conformal, GammaOutOfRange) {
  EXPECT_THROW(conformal_threshold(std::vector<double>{1, 2}, 0.0), Error);
  EXPECT_THROW(conformal_threshold(std::vector<double>{1, 2}, 1.0), Error);
}

TEST(Conformal, ThresholdNonincreasingInBudget) {
  Rng rng(RngHandle{12, 0});
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(1 + rng.below(200));
    for (auto& v : s) v = rng.normal();
    double prev = std::numeric_limits<double>::infinity();
    for (double g = 0.01; g < 0.995; g += 0.01) {
      const double c = conformal_threshold(s, g).c_hat;
      ASSERT_LE(c, prev);
      prev = c;
    }
  }
}

TEST(Conformal, RejectionRateCeilingOnCalibrationScores) {
  Rng rng(RngHandle{13, 0});
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + rng.below(300);
    std::vector<double> s(m);
    for (auto& v : s) v = std::floor(rng.uniform(0, 20));  // ties included
    const double g = rng.uniform(0.01, 0.99);
    const double c = conformal_threshold(s, g).c_hat;
    const double rejected = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > c; }));
    ASSERT_LE(rejected / static_cast<double>(m), g + 1.0 / static_cast<double>(m + 1) + 1e-12);
  }
}

TEST(Conformal, CoverageProperty) {
  const auto est = verify::conformal_coverage(7, 99, 0.2, 500, 50);
  EXPECT_GE(est.acceptance, 0.8 - 0.03);
  EXPECT_LE(est.acceptance, 0.8 + 0.01 + 0.03);
}

TEST(BayesPair, ZeroVarianceAcceptsEverywhere) {
  const auto t = SyntheticTask::discrete("z", 1, {0, 1, 2}, {0.2, 0.3, 0.5}, {1, 2, 3}, {0, 0, 0});
  const auto pair = oracle_bayes_pair(t, 0.0);
  for (double x : {0.0, 1.0, 2.0}) EXPECT_EQ(pair.rejector.accept(pt(x)), 1);
  EXPECT_EQ(oracle_rwr_risk(pair.regressor, pair.rejector, t, 0.0), 0.0);
}

TEST(BayesPair, ThresholdRule) {
  const auto pair = oracle_bayes_pair(two_point_task(), 2.0);
  const double x0 = 0, x1 = 1;
  EXPECT_EQ(pair.rejector.accept(pt(x0)), 1);
  EXPECT_EQ(pair.rejector.accept(pt(x1)), 0);
  EXPECT_EQ(pair.regressor.predict(pt(x0)), 0.0);
}

TEST(BayesPair, CostBelowAllVariancesDefersEverywhere) {
  const auto t = two_point_task();
  const auto pair = oracle_bayes_pair(t, 0.5);
  const double x0 = 0, x1 = 1;
  EXPECT_EQ(pair.rejector.accept(pt(x0)), 0);
  EXPECT_EQ(pair.rejector.accept(pt(x1)), 0);
  EXPECT_DOUBLE_EQ(oracle_rwr_risk(pair.regressor, pair.rejector, t, 0.5), 0.5);
}

TEST(BayesPair, ContinuousTaskUnsupported) {
  try {
    oracle_bayes_pair(tasks::hetero1d(), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedTask);
  }
}

TEST(Classification, CertainLabelsAccepted) {
  const BinaryTask task{1, {0, 1}, {0.5, 0.5}, {1.0, 1.0}};
  const auto out = classify_with_rejection(task, 0.1);
  for (double x : {0.0, 1.0}) {
    EXPECT_EQ(out.classifier.predict(pt(x)), 1.0);
    EXPECT_EQ(out.rejector.accept(pt(x)), 1);
  }
  EXPECT_EQ(out.rwr_risk, 0.0);
}

TEST(Classification, CoinFlipDeferred) {
  const BinaryTask task{1, {0}, {1.0}, {0.5}};
  const auto out = classify_with_rejection(task, 0.3);
  const double x = 0;
  EXPECT_EQ(out.conditional_risk[0], 0.5);
  EXPECT_EQ(out.rejector.accept(pt(x)), 0);
  EXPECT_DOUBLE_EQ(out.rwr_risk, 0.3);
}

TEST(Classification, ConfidentPointAccepted) {
  const BinaryTask task{1, {0}, {1.0}, {0.9}};
  const auto out = classify_with_rejection(task, 0.2);
  const double x = 0;
  EXPECT_NEAR(out.conditional_risk[0], 0.1, 1e-15);
  EXPECT_EQ(out.rejector.accept(pt(x)), 1);
  EXPECT_EQ(out.classifier.predict(pt(x)), 1.0);
}

TEST(Calibrator, KernelErrorShrinksWithValidationSize) {
  const auto task = std::make_shared<const SyntheticTask>(tasks::hetero1d());
  const auto f = std::make_shared<const RegressorModel>(RegressorModel::constant(0.0));
  const auto truth = CalibratorModel::oracle(task, f);
  std::vector<double> grid(101);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = task->lo() + (task->hi() - task->lo()) * static_cast<double>(i) / 100.0;
  std::vector<double> med;
  for (std::size_t n : {50u, 200u, 800u}) {
    std::vector<double> err;
    for (std::uint64_t s = 0; s < 9; ++s) {
      Rng rng(RngHandle{200 + s, streams::kSample});
      const auto val = task->sample(n, rng);
      const auto [inner, outer] = halves(val);
      const auto kernel = select_bandwidth_by_fit(*f, inner, outer, KernelSpec{});
      const auto cal = kernel_calibrate(*f, val, kernel);
      double e = 0;
      for (double& x : grid) e += std::abs(cal.estimate(pt(x)) - truth.estimate(pt(x)));
      err.push_back(e / static_cast<double>(grid.size()));
    }
    med.push_back(median(err));
  }
  EXPECT_GT(med[0], med[1]);
  EXPECT_GT(med[1], med[2]);
}

TEST(Calibrator, LossLinearRecoversLinearLoss) {
  // Residual y - f(x) = sqrt(x) * sign, so the squared loss is exactly x.
  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    const double x = 0.1 * i;
    xs.push_back(x);
    ys.push_back((i % 2 ? 1 : -1) * std::sqrt(x));
  }
  const auto f = std::make_shared<const RegressorModel>(RegressorModel::constant(0));
  const auto cal = fit_loss_linear(f, make_1d(xs, ys));
  const double q = 1.25;
  EXPECT_NEAR(cal.estimate(pt(q)), 1.25, 1e-6);
}

TEST(Calibrator, InducedRejectorAttainsTruncatedLoss) {
  Rng rng(RngHandle{14, 0});
  for (int t = 0; t < 100; ++t) {
    const auto task = std::make_shared<const SyntheticTask>(tasks::random_discrete(rng));
    const double c = rng.uniform(0.1, 5);
    const auto f = std::make_shared<const RegressorModel>(random_tables::regressor(*task, rng, 2.0));
    const auto r = induce_rejector(CalibratorModel::oracle(task, f), c);
    ASSERT_NEAR(oracle_rwr_risk(*f, r, *task, c), truncated_loss(*f, *task, c), 1e-12);
  }
}
