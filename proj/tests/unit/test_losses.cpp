#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "rwr/losses.hpp"
#include "rwr/oracle.hpp"
#include "rwr/rejection.hpp"
#include "rwr/verify.hpp"

using namespace rwr;
using rwr::testing::make_1d;
using rwr::testing::two_point_task;

namespace {

RegressorModel shifted(const SyntheticTask& t, std::vector<double> shift) {
  std::vector<double> pts(t.support_points().begin(), t.support_points().end()), vals;
  for (std::size_t i = 0; i < t.support_size(); ++i) vals.push_back(t.nodes()[i].mean + shift[i]);
  return RegressorModel::table(t.dim(), pts, vals);
}

RejectorModel accept_table(const SyntheticTask& t, std::vector<int> a) {
  std::vector<double> pts(t.support_points().begin(), t.support_points().end());
  return RejectorModel::table(t.dim(), pts, std::move(a));
}

}  // namespace

TEST(EmpiricalRwr, AlwaysDeferCostsC) {
  const auto d = make_1d({0, 1, 2}, {3, -1, 7});
  const auto rep = empirical_rwr_loss(RegressorModel::constant(0), RejectorModel::constant(0), d, 2.5);
  EXPECT_EQ(rep.rwr_loss, 2.5);
  EXPECT_EQ(rep.rejection_rate, 1.0);
  EXPECT_TRUE(rep.all_deferred);
  EXPECT_EQ(rep.machine_loss, 0.0);
}

TEST(EmpiricalRwr, PerfectPredictorAcceptingAllIsZero) {
  const auto d = make_1d({0, 1, 2}, {5, 6, 7});
  const auto f = RegressorModel::table(1, {0, 1, 2}, {5, 6, 7});
  EXPECT_EQ(empirical_rwr_loss(f, RejectorModel::constant(1), d, 2.0).rwr_loss, 0.0);
}

TEST(EmpiricalRwr, HandEnumeratedExample) {
  // Squared losses 1 and 9; only the first is accepted.
  const auto d = make_1d({0, 1}, {1, 3});
  const auto r = RejectorModel::table(1, {0, 1}, {1, 0});
  const auto rep = empirical_rwr_loss(RegressorModel::constant(0), r, d, 2.0);
  EXPECT_DOUBLE_EQ(rep.rwr_loss, 1.5);
  EXPECT_DOUBLE_EQ(rep.machine_loss, 1.0);
  EXPECT_DOUBLE_EQ(rep.rejection_rate, 0.5);
  EXPECT_EQ(rep.n_evaluated, 2u);
}

TEST(EmpiricalRwr, MatchesPerSampleDefinition) {
  Rng rng(RngHandle{5, 0});
  const auto task = tasks::grid6();
  const auto d = task.sample(200, rng);
  const auto f = RegressorModel::constant(0.3);
  const auto r = accept_table(task, {1, 0, 1, 1, 0, 0});
  const double c = 1.7;
  double total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = f.predict(d.row(i)) - d.target(i);
    total += r.accept(d.row(i)) ? e * e : c;
  }
  EXPECT_NEAR(empirical_rwr_loss(f, r, d, c).rwr_loss, total / 200.0, 1e-12);
}

TEST(EmpiricalRwr, EmptyDatasetAndNegativeCost) {
  const auto d = make_1d({0}, {0});
  EXPECT_THROW(empirical_rwr_loss(RegressorModel::constant(0), RejectorModel::constant(1), d, -1.0), Error);
  try {
    empirical_rwr_loss(RegressorModel::constant(0), RejectorModel::constant(1), Dataset{}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
  }
}

TEST(OracleRisk, ZeroBiasAcceptAllIsMeanVariance) {
  const auto t = two_point_task();
  EXPECT_DOUBLE_EQ(oracle_rwr_risk(shifted(t, {0, 0}), RejectorModel::constant(1), t, 2.0), 5.0);
}

TEST(OracleRisk, AcceptLowVarianceOnly) {
  const auto t = two_point_task();
  EXPECT_DOUBLE_EQ(oracle_rwr_risk(shifted(t, {0, 0}), accept_table(t, {1, 0}), t, 2.0), 1.5);
}

TEST(OracleRisk, BayesRuleOnTwoPointTask) {
  const auto t = two_point_task();
  const auto pair = oracle_bayes_pair(t, 2.0);
  const double x0 = 0.0, x1 = 1.0;
  EXPECT_EQ(pair.rejector.accept(rwr::testing::pt(x0)), 1);
  EXPECT_EQ(pair.rejector.accept(rwr::testing::pt(x1)), 0);
  EXPECT_DOUBLE_EQ(oracle_rwr_risk(pair.regressor, pair.rejector, t, 2.0), 1.5);
}

TEST(OracleRisk, ContinuousTaskUsesQuadrature) {
  const auto t = tasks::hetero1d();
  EXPECT_NEAR(squared_risk(RegressorModel::constant(0.0), t), 0.5 + 0.42, 1e-10);  // E[sin^2(pi X)] = 1/2
}

TEST(OracleRisk, TaskWithoutNodesIsUnsupported) {
  try {
    (void)bayes_rwr_risk(SyntheticTask{}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedTask);
  }
}

TEST(TruncatedLoss, HandEnumerated) {
  const auto t = two_point_task();
  EXPECT_DOUBLE_EQ(truncated_loss(shifted(t, {0, 0}), t, 2.0), 1.5);
}

TEST(TruncatedLoss, LargeCostEqualsSquaredRisk) {
  const auto t = tasks::grid6();
  const auto f = shifted(t, {1, -2, 0.5, 0, 3, -1});
  EXPECT_NEAR(truncated_loss(f, t, 1e6), squared_risk(f, t), 1e-12);
}

TEST(TruncatedLoss, ZeroCostIsZero) {
  const auto t = tasks::grid6();
  EXPECT_EQ(truncated_loss(shifted(t, {1, 1, 1, 1, 1, 1}), t, 0.0), 0.0);
}

TEST(SquaredRisk, BiasVarianceIdentity) {
  const auto t = two_point_task();
  EXPECT_DOUBLE_EQ(squared_risk(shifted(t, {0, 0}), t), 5.0);
  EXPECT_DOUBLE_EQ(squared_risk(shifted(t, {1, 1}), t), 6.0);
}

TEST(SquaredRisk, EmpiricalResiduals) {
  EXPECT_DOUBLE_EQ(empirical_squared_loss(RegressorModel::constant(0), make_1d({0, 1}, {1, -1})), 1.0);
}

TEST(ExcessLosses, ZeroAtConditionalMean) {
  const auto ex = excess_losses(shifted(tasks::grid6(), std::vector<double>(6, 0.0)), tasks::grid6(), 2.0);
  EXPECT_EQ(ex.truncated, 0.0);
  EXPECT_EQ(ex.squared, 0.0);
}

TEST(ExcessLosses, EqualityCase) {
  const auto t = two_point_task();
  const auto ex = excess_losses(shifted(t, {1, 0}), t, 2.0);
  EXPECT_DOUBLE_EQ(ex.squared, 0.5);
  EXPECT_DOUBLE_EQ(ex.truncated, 0.5);
}

TEST(ExcessLosses, StrictCase) {
  const auto t = two_point_task();
  const auto ex = excess_losses(shifted(t, {10, 0}), t, 2.0);
  EXPECT_DOUBLE_EQ(ex.truncated, 0.5);
  EXPECT_DOUBLE_EQ(ex.squared, 50.0);
}

TEST(LossInvariants, SurrogateInequalityRandomSuite) {
  const auto p = verify::surrogate_inequality(1, 100);
  EXPECT_TRUE(p.passed) << p.margin;
}

TEST(LossInvariants, TruncatedLowerBoundAndEquality) {
  const auto p = verify::truncated_sandwich(2, 100);
  EXPECT_TRUE(p.passed) << p.detail.dump();
}

TEST(LossInvariants, CalibrationGapBound) {
  Rng rng(RngHandle{3, 9});
  for (int t = 0; t < 100; ++t) {
    const auto task = tasks::random_discrete(rng);
    const double c = rng.uniform(0.2, 5.0);
    const auto f = random_tables::regressor(task, rng, 2.0);
    const auto cal = random_tables::calibrator(task, f, rng, 1.0);
    const double lhs = oracle_rwr_risk(f, induce_rejector(cal, c), task, c);
    ASSERT_LE(lhs, truncated_loss(f, task, c) + calibration_error(cal, f, task) + 1e-12);
  }
}

TEST(LossInvariants, MonteCarloDecompositionWithinThreeStandardErrors) {
  const auto task = tasks::grid6();
  Rng rng(RngHandle{17, 0});
  const auto data = task.sample(100000, rng);
  const auto f = shifted(task, {0.5, -0.5, 0, 1, 0, -1});
  const auto r = accept_table(task, {1, 1, 0, 1, 1, 0});
  const double c = 2.0;
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = f.predict(data.row(i)) - data.target(i);
    const double l = r.accept(data.row(i)) ? e * e : c;
    sum += l;
    sum2 += l * l;
  }
  const double n = static_cast<double>(data.size());
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  EXPECT_NEAR(empirical_rwr_loss(f, r, data, c).rwr_loss, mean, 1e-9);
  EXPECT_LE(std::abs(mean - oracle_rwr_risk(f, r, task, c)), 3 * se);
}
