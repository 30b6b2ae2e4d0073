#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "rwr/losses.hpp"
#include "rwr/oracle.hpp"
#include "rwr/rejection.hpp"
#include "rwr/task.hpp"
#include "rwr/verify.hpp"

using namespace rwr;
using rwr::testing::pt;
using rwr::testing::two_point_task;

namespace {

constexpr double kC = 2.0;

double truncated_bayes(const SyntheticTask& t, double c) {
  double s = 0;
  for (const auto& n : t.nodes()) s += n.weight * std::min(n.var, c);
  return s;
}

}  // namespace

TEST(Task, TwoPointNoiseHasExactMoments) {
  const auto t = tasks::grid6();
  double w = 0;
  for (const auto& n : t.nodes()) w += n.weight;
  EXPECT_NEAR(w, 1.0, 1e-12);
  Rng rng(RngHandle{21, 0});
  const double x = 2.0;
  for (int i = 0; i < 20; ++i) {
    const double y = t.draw_y(pt(x), rng);
    EXPECT_NEAR(std::abs(y - std::sin(2.0)), 1.0, 1e-12);
  }
}

TEST(Task, RejectsInvalidWeights) {
  EXPECT_THROW(SyntheticTask::discrete("bad", 1, {0, 1}, {0.5, 0.6}, {0, 0}, {1, 1}), Error);
  EXPECT_THROW(SyntheticTask::discrete("bad", 1, {0, 1}, {0.5, 0.5}, {0, 0}, {1, -1}), Error);
}

TEST(Locality, MetricsZeroIffEqualOnSupport) {
  const auto t = two_point_task();
  const auto f = RegressorModel::table(1, {0, 1}, {0, 0});
  const auto g = RegressorModel::table(1, {0, 1}, {0, -3});
  EXPECT_EQ(LocalityMetric::regressor_distance(f, f, t), 0.0);
  EXPECT_EQ(LocalityMetric::regressor_distance(f, g, t), 3.0);
  const auto r = RejectorModel::table(1, {0, 1}, {1, 0});
  const auto s = RejectorModel::table(1, {0, 1}, {1, 1});
  EXPECT_EQ(LocalityMetric::rejector_distance(r, r, t), 0.0);
  EXPECT_EQ(LocalityMetric::rejector_distance(r, s, t), 0.5);
}

TEST(LocalCounterexample, ConstructionRiskEqualsCost) {
  const auto t = tasks::grid6();
  const auto p = build_local_counterexample(t, kC);
  EXPECT_NEAR(oracle_rwr_risk(p.regressor, p.rejector, t, kC), kC, 1e-12);
}

TEST(LocalCounterexample, EveryPointHasRiskAtLeastCost) {
  const auto t = tasks::grid6();
  const auto p = build_local_counterexample(t, kC);
  for (const auto& n : t.nodes()) {
    const double b = p.regressor.predict(n.x) - n.mean;
    const double r = b * b + n.var;
    EXPECT_GE(r, kC);
    if (n.var <= kC) {
      EXPECT_NEAR(r, 4 * kC + n.var, 1e-12);
    }
    EXPECT_EQ(p.rejector.accept(n.x), 0);
  }
}

TEST(LocalCounterexample, GlobalOptimumStrictlyBelowCost) {
  const auto t = tasks::grid6();
  EXPECT_NEAR(bayes_rwr_risk(t, kC), truncated_bayes(t, kC), 1e-12);
  EXPECT_LT(bayes_rwr_risk(t, kC), kC);
}

TEST(LocalCounterexample, PremiseViolated) {
  try {
    build_local_counterexample(tasks::grid6(), 100.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PremiseViolated);
  }
  EXPECT_THROW(build_local_counterexample(tasks::grid6(), 0.1), Error);
}

TEST(LocalCounterexample, NoImprovingPerturbationWithinRadius) {
  const auto t = tasks::grid6();
  const auto rep = verify_local_optimality(build_local_counterexample(t, kC), t, LocalityMetric{0.9 * std::sqrt(kC)}, kC,
                                           10000, RngHandle{22, streams::kVerify});
  EXPECT_TRUE(rep.locally_optimal);
  EXPECT_FALSE(rep.counterexample.has_value());
  EXPECT_GE(rep.perturbations_checked, 10000u);
  EXPECT_NEAR(rep.global_gap, kC - truncated_bayes(t, kC), 1e-12);
  EXPECT_GT(rep.global_gap, 0.0);
}

TEST(LocalCounterexample, BayesPairLocallyAndGloballyOptimal) {
  const auto t = tasks::grid6();
  const auto rep = verify_local_optimality(oracle_bayes_pair(t, kC), t, LocalityMetric{0.9 * std::sqrt(kC)}, kC, 2000,
                                           RngHandle{23, streams::kVerify});
  EXPECT_TRUE(rep.locally_optimal);
  EXPECT_NEAR(rep.global_gap, 0.0, 1e-12);
}

TEST(LocalCounterexample, LargeRadiusFindsImprovement) {
  // Beyond sqrt(c) the shifted regressor can move back to the conditional mean.
  const auto t = tasks::grid6();
  const auto rep = verify_local_optimality(build_local_counterexample(t, kC), t, LocalityMetric{3.0 * std::sqrt(kC)}, kC, 2000,
                                           RngHandle{24, streams::kVerify});
  EXPECT_FALSE(rep.locally_optimal);
  ASSERT_TRUE(rep.counterexample.has_value());
  EXPECT_LT(rep.best_neighbor_risk, rep.pair_risk);
}

TEST(EntrywiseCounterexample, RegionIsDeferred) {
  const auto t = tasks::grid6();
  const auto p = build_entrywise_counterexample(t, kC);
  const auto region = low_variance_region(t, kC);
  for (std::size_t i = 0; i < t.support_size(); ++i)
    if (region[i]) {
      EXPECT_EQ(p.rejector.accept(t.nodes()[i].x), 0);
    }
}

TEST(EntrywiseCounterexample, PerturbingInsideRegionIsFree) {
  const auto t = tasks::grid6();
  const auto p = build_entrywise_counterexample(t, kC);
  const auto base = tabulate(p, t);
  const auto region = low_variance_region(t, kC);
  const double risk = table_rwr_risk(t, base.values, base.accept, kC);
  for (std::size_t i = 0; i < t.support_size(); ++i) {
    if (!region[i]) continue;
    for (double d : {-3.0, -0.5, 0.5, 3.0}) {
      auto v = base.values;
      v[i] += d;
      EXPECT_DOUBLE_EQ(table_rwr_risk(t, v, base.accept, kC), risk);
    }
  }
}

TEST(EntrywiseCounterexample, GapFormula) {
  const auto t = tasks::grid6();
  const auto p = build_entrywise_counterexample(t, kC);
  const auto region = low_variance_region(t, kC);
  const double gap = oracle_rwr_risk(p.regressor, p.rejector, t, kC) - bayes_rwr_risk(t, kC);
  double expected = 0;
  for (std::size_t i = 0; i < t.support_size(); ++i)
    if (region[i]) expected += t.nodes()[i].weight * (kC - t.nodes()[i].var);
  EXPECT_NEAR(gap, expected, 1e-12);
  EXPECT_NEAR(entrywise_gap(t, kC, region), expected, 1e-12);
  EXPECT_GT(gap, 0.0);
}

TEST(EntrywiseCounterexample, ConstructionIsEntrywiseOptimal) {
  const auto t = tasks::grid6();
  const auto rep = verify_entrywise_optimality(build_entrywise_counterexample(t, kC), t, kC);
  EXPECT_TRUE(rep.entrywise_optimal());
  EXPECT_TRUE(rep.exhaustive);
  EXPECT_EQ(rep.rejectors_checked, 64u);
  EXPECT_GT(rep.global_gap, 0.0);
}

TEST(EntrywiseCounterexample, BayesPairEntrywiseOptimal) {
  const auto t = tasks::grid6();
  const auto rep = verify_entrywise_optimality(oracle_bayes_pair(t, kC), t, kC);
  EXPECT_TRUE(rep.entrywise_optimal());
  EXPECT_NEAR(rep.global_gap, 0.0, 1e-12);
}

TEST(EntrywiseCounterexample, SwappingInBayesRejectorDoesNotBeatBayesPair) {
  const auto t = tasks::grid6();
  const auto p = build_entrywise_counterexample(t, kC);
  const auto star = oracle_bayes_pair(t, kC);
  EXPECT_GE(oracle_rwr_risk(p.regressor, star.rejector, t, kC),
            oracle_rwr_risk(star.regressor, star.rejector, t, kC) - 1e-12);
}

TEST(EntrywiseCounterexample, EmptyRegionIsPremiseViolation) {
  try {
    build_entrywise_counterexample(tasks::grid6(), kC, std::vector<bool>(6, false));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PremiseViolated);
  }
}

TEST(GridSearch, MinimumMatchesBayesRisk) {
  const auto t = tasks::grid6();
  const auto g = grid_minimum_rwr(t, kC, 4, 0.25 * std::sqrt(kC));
  EXPECT_NEAR(g.min_risk, bayes_rwr_risk(t, kC), 1e-12);
  EXPECT_NEAR(table_rwr_risk(t, g.argmin.values, g.argmin.accept, kC), g.min_risk, 1e-12);
}

TEST(ExcessRiskBound, PerfectInputsGiveZeroTerms) {
  const auto t = std::make_shared<const SyntheticTask>(tasks::grid6());
  const auto f = std::make_shared<const RegressorModel>(oracle_bayes_pair(*t, kC).regressor);
  const auto terms = check_excess_risk_bound(*f, CalibratorModel::oracle(t, f), *t, kC);
  EXPECT_NEAR(terms.lhs, 0.0, 1e-12);
  EXPECT_NEAR(terms.prediction_error, 0.0, 1e-12);
  EXPECT_NEAR(terms.calibration_error, 0.0, 1e-12);
}

TEST(ExcessRiskBound, AdversarialCalibratorStillBounded) {
  const auto t = tasks::grid6();
  const auto f = oracle_bayes_pair(t, kC).regressor;
  std::vector<double> pts(t.support_points().begin(), t.support_points().end()), vals;
  for (const auto& n : t.nodes()) vals.push_back(n.var + kC);
  const auto terms = check_excess_risk_bound(f, CalibratorModel::table(1, pts, vals), t, kC);
  EXPECT_GT(terms.lhs, 0.0);
  EXPECT_LE(terms.lhs, terms.calibration_error + 1e-12);
  EXPECT_NEAR(terms.calibration_error, kC, 1e-12);
}

TEST(ExcessRiskBound, RandomTablesSatisfyBound) {
  Rng rng(RngHandle{25, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = tasks::random_discrete(rng);
    const double c = rng.uniform(0.2, 5);
    const auto f = random_tables::regressor(t, rng, 2.0);
    const auto cal = random_tables::calibrator(t, f, rng, 1.0);
    const auto terms = check_excess_risk_bound(f, cal, t, c);
    ASSERT_GE(terms.slack(), -1e-12);
  }
}

TEST(TheorySuite, AllPropertiesPass) {
  const auto rep = verify::run_theory_suite(20240601);
  for (const auto& p : rep.properties) EXPECT_TRUE(p.passed) << p.name << " margin " << p.margin;
  EXPECT_TRUE(rep.all_passed());
}

TEST(TheorySuite, PairConsistencyAndWeakRealizability) {
  EXPECT_TRUE(verify::pair_consistency().passed);
  EXPECT_TRUE(verify::weak_realizability(26).passed);
}
