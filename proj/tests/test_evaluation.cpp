#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "deepcv/errors.hpp"
#include "deepcv/evaluation.hpp"
#include "deepcv/margrabe.hpp"
#include "deepcv/normal.hpp"
#include "test_models.hpp"

using namespace deepcv;

namespace {

const MarketModel kExchange = MarketModel::uncorrelated(2, 0.05, 0.3);
const InitialSampler kAtTheMoney = InitialSampler::fixed(Eigen::Vector2d(1, 1));

double margrabe_reference() { return margrabe_price(1, 1, 0.5, exchange_sigma_bar(kExchange)); }

}  // namespace

TEST(MartingaleSum, ZeroNetworksGiveZero) {
  const TimeGrid g = TimeGrid::uniform(0.5, 10);
  const PathBatch p = simulate_paths(kExchange, g, 100, kAtTheMoney, RandomStream(1));
  EXPECT_TRUE(martingale_sum(test_support::zero_control_variate(2, g), p, kExchange).isZero(0.0));
}

TEST(MartingaleSum, SingleStepHandEvaluation) {
  const MarketModel m = MarketModel::uncorrelated(1, 0.05, 0.3);
  const TimeGrid g = TimeGrid::uniform(0.5, 1);
  ControlVariateModel cv;
  cv.grid = g;
  cv.dim = 1;
  Network one({{1, 1}});
  one.mutable_bias(0)(0) = 1.0;
  cv.gradient_nets.push_back(one);
  const PathBatch p = simulate_paths(m, g, 20, InitialSampler::fixed(Eigen::VectorXd::Ones(1)), RandomStream(2));
  const Eigen::RowVectorXd sum = martingale_sum(cv, p, m);
  for (Eigen::Index j = 0; j < 20; ++j) EXPECT_NEAR(sum(j), 0.3 * p.increments[0](0, j), 1e-15);
}

TEST(MartingaleSum, DiscountsLaterIncrements) {
  const MarketModel m = MarketModel::uncorrelated(1, 0.05, 0.3);
  const TimeGrid g = TimeGrid::uniform(0.5, 2);
  ControlVariateModel cv;
  cv.grid = g;
  cv.dim = 1;
  for (int k = 0; k < 2; ++k) {
    Network one({{1, 1}});
    one.mutable_bias(0)(0) = 1.0;
    cv.gradient_nets.push_back(one);
  }
  const PathBatch p = simulate_paths(m, g, 5, InitialSampler::fixed(Eigen::VectorXd::Ones(1)), RandomStream(3));
  const Eigen::RowVectorXd sum = martingale_sum(cv, p, m);
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double expected = 0.3 * p.increments[0](0, j) +
                            std::exp(-0.05 * 0.25) * p.states[1](0, j) * 0.3 * p.increments[1](0, j);
    EXPECT_NEAR(sum(j), expected, 1e-14);
  }
}

TEST(MartingaleSum, HasZeroMeanForFixedNetworks) {
  const TimeGrid g = TimeGrid::uniform(0.5, 10);
  RandomStream rng(4);
  const ControlVariateModel cv = test_support::random_control_variate(2, g, rng);
  const PathBatch p = simulate_paths(kExchange, g, 100000, kAtTheMoney, RandomStream(5));
  const Eigen::RowVectorXd m = martingale_sum(cv, p, kExchange);
  SampleMoments s;
  s.add(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
  EXPECT_GT(s.variance(), 0.0);
  EXPECT_LT(std::abs(s.mean()), 4.0 * s.std_error());
}

TEST(MartingaleSum, GridMismatchIsRejected) {
  const PathBatch p = simulate_paths(kExchange, TimeGrid::uniform(0.5, 4), 3, kAtTheMoney, RandomStream(6));
  EXPECT_THROW(martingale_sum(test_support::zero_control_variate(2, TimeGrid::uniform(0.5, 5)), p, kExchange), ConfigError);
}

TEST(CvEstimate, LambdaZeroReproducesPlainMonteCarlo) {
  const TimeGrid g = TimeGrid::uniform(0.5, 5);
  RandomStream rng(7);
  const ControlVariateModel cv = test_support::random_control_variate(2, g, rng);
  const PathBatch p = simulate_paths(kExchange, g, 1000, kAtTheMoney, RandomStream(8));
  const CvSample s = cv_estimate(cv, p, Payoff::exchange(), kExchange, 0.0);
  EXPECT_EQ(s.values, s.xi);
  EXPECT_EQ(s.xi, discounted_payoff(p, Payoff::exchange()));
}

TEST(CvEstimate, RandomNetworkIsUnbiased) {
  const TimeGrid g = TimeGrid::uniform(0.5, 10);
  RandomStream rng(9);
  const ControlVariateModel cv = test_support::random_control_variate(2, g, rng);
  const PathBatch p = simulate_paths(kExchange, g, 100000, kAtTheMoney, RandomStream(10));
  const CvSample s = cv_estimate(cv, p, Payoff::exchange(), kExchange, 1.0);
  SampleMoments plain;
  plain.add(std::span<const double>(s.xi.data(), static_cast<std::size_t>(s.xi.size())));
  const double z = normal_quantile(0.995);
  const double gap = std::abs(s.moments.mean() - plain.mean());
  EXPECT_LT(gap, z * (s.moments.std_error() + plain.std_error()));
}

TEST(CvEstimate, ExactDeltaReducesVarianceNearReference) {
  const TimeGrid g = TimeGrid::uniform(0.5, 50);
  const ControlVariateModel cv = margrabe_control_variate(kExchange, g);
  const PathBatch p = simulate_paths(kExchange, g, 200000, kAtTheMoney, RandomStream(11));
  const CvSample s = cv_estimate(cv, p, Payoff::exchange(), kExchange);
  SampleMoments plain;
  plain.add(std::span<const double>(s.xi.data(), static_cast<std::size_t>(s.xi.size())));
  EXPECT_NEAR(s.moments.variance(), 2.12e-4, 0.5 * 2.12e-4);
  const double factor = plain.variance() / s.moments.variance();
  EXPECT_GE(factor, 100.0);
  EXPECT_LE(factor, 200.0);
  EXPECT_LT(std::abs(s.moments.mean() - margrabe_reference()), 4.0 * s.moments.std_error());
}

TEST(OptimalLambda, Examples) {
  RandomStream rng(12);
  std::vector<double> x(1000), twice(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.next_normal();
    twice[i] = 2.0 * x[i];
  }
  EXPECT_NEAR(optimal_lambda(x, x).lambda, 1.0, 1e-12);
  EXPECT_NEAR(optimal_lambda(x, twice).lambda, 0.5, 1e-12);
  const std::size_t n = 100000;
  const auto a = standard_normals(RandomStream(13), n), b = standard_normals(RandomStream(14), n);
  EXPECT_LE(std::abs(optimal_lambda(a, b).lambda), 4.0 / std::sqrt(static_cast<double>(n)));
  const std::vector<double> constant(10, 3.0);
  const LambdaEstimate degenerate = optimal_lambda(std::vector<double>(x.begin(), x.begin() + 10), constant);
  EXPECT_TRUE(degenerate.degenerate);
  EXPECT_EQ(degenerate.lambda, 0.0);
}

TEST(OptimalLambda, ReductionFactorInvariantToPayoffScaling) {
  const auto xi = standard_normals(RandomStream(15), 5000);
  auto m = standard_normals(RandomStream(16), 5000);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.8 * xi[i] + 0.3 * m[i];
  auto factor = [&](double c) {
    std::vector<double> scaled(xi);
    for (double& v : scaled) v *= c;
    const double lambda = optimal_lambda(scaled, m).lambda;
    SampleMoments plain, cv;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      plain.add(scaled[i]);
      cv.add(scaled[i] - lambda * m[i]);
    }
    return plain.variance() / cv.variance();
  };
  EXPECT_NEAR(factor(1.0), factor(37.5), 1e-9 * factor(1.0));
  EXPECT_NEAR(factor(1.0), factor(1e-3), 1e-9 * factor(1.0));
}

TEST(Chi2Interval, NineDegreesOfFreedomReference) {
  // sample variance exactly 1 over 10 values
  std::vector<double> v(10, 0.0);
  v[0] = std::sqrt(4.5);
  v[1] = -std::sqrt(4.5);
  SampleMoments s;
  for (double x : v) s.add(x);
  ASSERT_NEAR(s.variance(), 1.0, 1e-14);
  const Interval ci = variance_chi2_ci(v);
  EXPECT_NEAR(ci.lower, 0.4731, 1e-3);
  EXPECT_NEAR(ci.upper, 3.3328, 1e-3);
  const Interval zero = variance_chi2_ci(std::vector<double>(5, 2.0));
  EXPECT_EQ(zero.lower, 0.0);
  EXPECT_EQ(zero.upper, 0.0);
  EXPECT_THROW(variance_chi2_ci(std::vector<double>{1.0}), ConfigError);
}

TEST(Chi2Interval, CoverageOnGaussianReplicates) {
  RandomStream rng(17);
  int covered = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> v(10);
    for (double& x : v) x = 2.0 * rng.next_normal();
    const Interval ci = variance_chi2_ci(v);
    covered += ci.lower <= 4.0 && 4.0 <= ci.upper;
  }
  EXPECT_NEAR(covered / static_cast<double>(trials), 0.95, 0.02);
}

TEST(Evaluate, PlainVarianceMeanAndNullControlVariate) {
  const TimeGrid g = TimeGrid::uniform(0.5, 50);
  EvaluationOptions o;
  o.n_mc = 10;
  o.n_in = 20000;
  const EvaluationReport r =
      evaluate(test_support::zero_control_variate(2, g), kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(18), o);
  EXPECT_NEAR(r.plain_variance, 3.16e-2, 0.2 * 3.16e-2);
  EXPECT_DOUBLE_EQ(r.reduction_factor, 1.0);
  EXPECT_LT(std::abs(r.estimator_mean - margrabe_reference()), 4.0 * std::sqrt(r.plain_variance / 200000.0));
  EXPECT_EQ(r.plain_replicates.size(), 10u);
  EXPECT_LT(r.variance_ci_mc.lower, r.variance_ci_mc.upper);
  SampleMoments reps;
  for (double x : r.plain_replicates) reps.add(x);
  EXPECT_LT(r.variance_ci_mc.lower, reps.variance());
  EXPECT_GT(r.variance_ci_mc.upper, reps.variance());
  EXPECT_LT(r.estimator_ci.lower, r.estimator_mean);
  EXPECT_GT(r.estimator_ci.upper, r.estimator_mean);
}

TEST(Evaluate, LambdaOverrideZeroDisablesControlVariate) {
  const TimeGrid g = TimeGrid::uniform(0.5, 20);
  EvaluationOptions o;
  o.n_mc = 4;
  o.n_in = 5000;
  o.lambda_override = 0.0;
  const EvaluationReport r =
      evaluate(margrabe_control_variate(kExchange, g), kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(19), o);
  EXPECT_GE(r.reduction_factor, 0.9);
  EXPECT_LE(r.reduction_factor, 1.1);
  EXPECT_EQ(r.lambda, 0.0);
}

TEST(Evaluate, ThreadCountAndChunkingDoNotChangeResults) {
  const TimeGrid g = TimeGrid::uniform(0.5, 10);
  RandomStream rng(20);
  const ControlVariateModel cv = test_support::random_control_variate(2, g, rng);
  EvaluationOptions o;
  o.n_mc = 3;
  o.n_in = 3000;
  o.chunk = 500;
  const EvaluationReport a = evaluate(cv, kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(21), o);
  const EvaluationReport b = evaluate(cv, kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(21), o);
  o.threads = 3;
  const EvaluationReport c = evaluate(cv, kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(21), o);
  o.threads = 1;
  o.chunk = 700;
  const EvaluationReport d = evaluate(cv, kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(21), o);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.to_json().dump(), c.to_json().dump());
  EXPECT_NEAR(a.cv_variance, d.cv_variance, 1e-9 * a.cv_variance);
  EXPECT_NEAR(a.estimator_mean, d.estimator_mean, 1e-9 * std::abs(a.estimator_mean));
}

TEST(Evaluate, DimensionMismatchNamesBoth) {
  const TimeGrid g = TimeGrid::uniform(0.5, 3);
  try {
    evaluate(test_support::zero_control_variate(3, g), kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(1));
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("d = 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("d = 2"), std::string::npos) << msg;
  }
}

TEST(Evaluate, ReportSerialisation) {
  const TimeGrid g = TimeGrid::uniform(0.5, 3);
  EvaluationOptions o;
  o.n_mc = 2;
  o.n_in = 100;
  o.training_steps = 12;
  o.training_paths = 1200;
  const EvaluationReport r =
      evaluate(margrabe_control_variate(kExchange, g), kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(7), o);
  const auto j = r.to_json();
  for (const char* key : {"plain_variance", "cv_variance", "reduction_factor", "estimator_mean", "estimator_ci",
                          "variance_ci_mc", "variance_ci_cv", "lambda", "n_mc", "n_in", "seed", "training_steps",
                          "training_paths"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j.at("seed"), 7);
  EXPECT_EQ(j.at("training_paths"), 1200);
  const std::string header = EvaluationReport::csv_header(), row = r.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.find('\n'), std::string::npos);
}

TEST(RobustnessSweep, UnbiasedAtEverySigmaAndConsistentAtTrainingSigma) {
  const TimeGrid g = TimeGrid::uniform(0.5, 20);
  const ControlVariateModel cv = margrabe_control_variate(kExchange, g);
  EvaluationOptions o;
  o.n_mc = 5;
  o.n_in = 10000;
  const std::vector<double> sigmas{0.2, 0.25, 0.3, 0.35, 0.4};
  const auto rows = robustness_sweep(cv, kExchange, Payoff::exchange(), kAtTheMoney, sigmas, RandomStream(22), o);
  ASSERT_EQ(rows.size(), 5u);
  const EvaluationReport base = evaluate(cv, kExchange, Payoff::exchange(), kAtTheMoney, RandomStream(22), o);
  EXPECT_EQ(rows[2].report.reduction_factor, base.reduction_factor);
  for (const SweepRow& row : rows) {
    const double n = 50000.0;
    const double se = std::sqrt(row.report.plain_variance / n) + std::sqrt(row.report.cv_variance / n);
    EXPECT_LT(std::abs(row.report.estimator_mean - row.report.plain_mean), 4.0 * se) << row.sigma;
    const double sb = row.sigma * std::sqrt(2.0);
    EXPECT_LT(std::abs(row.report.estimator_mean - margrabe_price(1, 1, 0.5, sb)), 4.0 * std::sqrt(row.report.cv_variance / n));
  }
  std::ostringstream os;
  write_sweep_csv(os, rows);
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("sigma,factor,mean,ci_low,ci_high\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}
