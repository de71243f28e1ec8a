#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "deepcv/adam.hpp"
#include "deepcv/errors.hpp"
#include "deepcv/network.hpp"
#include "gradient_check.hpp"

using namespace deepcv;

namespace {

Eigen::MatrixXd normals(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.next_normal();
  return m;
}

// Random scale/shift so batch-norm sites are not the identity.
void perturb_batchnorm(Network& net, RandomStream& rng) {
  for (std::size_t s = 0; s < net.bn_sites(); ++s) {
    if (!net.site_affine(s)) continue;
    for (int i = 0; i < net.site_width(s); ++i) {
      net.mutable_parameters()(net.gamma_offset(s) + i) = 1.0 + 0.3 * rng.next_normal();
      net.mutable_parameters()(net.beta_offset(s) + i) = 0.3 * rng.next_normal();
    }
    for (int i = 0; i < net.site_width(s); ++i) {
      net.mutable_running_stats()(net.running_mean_offset(s) + i) = 0.2 * rng.next_normal();
      net.mutable_running_stats()(net.running_var_offset(s) + i) = 0.5 + rng.next_uniform();
    }
  }
}

}  // namespace

TEST(ParameterCount, ClosedFormExample) {
  EXPECT_EQ(parameter_count({{2, 22, 22, 1}}), 595u);
  NetworkSpec bn{{2, 22, 22, 1}, true};
  EXPECT_EQ(parameter_count(bn), 595u + 2 * (2 + 22 + 22 + 1));
  bn.output_bn_affine = false;
  EXPECT_EQ(parameter_count(bn), 595u + 2 * (2 + 22 + 22));
}

TEST(ParameterCount, MatchesNetworkForRandomArchitectures) {
  RandomStream rng(1, 0);
  for (int t = 0; t < 100; ++t) {
    NetworkSpec spec;
    const int layers = 2 + static_cast<int>(rng.next_u64() % 4);
    for (int k = 0; k < layers; ++k) spec.layer_sizes.push_back(1 + static_cast<int>(rng.next_u64() % 9));
    spec.batchnorm = rng.next_uniform() < 0.5;
    spec.output_bn_affine = rng.next_uniform() < 0.5;
    std::size_t expected = 0;
    for (std::size_t k = 1; k < spec.layer_sizes.size(); ++k)
      expected += spec.layer_sizes[k - 1] * spec.layer_sizes[k] + spec.layer_sizes[k];
    if (spec.batchnorm)
      for (std::size_t s = 0; s < spec.layer_sizes.size(); ++s)
        if (s + 1 < spec.layer_sizes.size() || spec.output_bn_affine) expected += 2 * spec.layer_sizes[s];
    EXPECT_EQ(Network(spec).parameter_count(), expected);
    EXPECT_EQ(parameter_count(spec), expected);
  }
}

TEST(InitNetwork, ShapesDeterminismAndStatistics) {
  RandomStream a(7, 0), b(7, 0);
  const NetworkSpec spec{{2, 22, 22, 2}, true};
  const Network n1 = init_network(spec, a), n2 = init_network(spec, b);
  EXPECT_EQ(n1.parameters(), n2.parameters());
  EXPECT_EQ(n1.output_width(), 2);
  EXPECT_TRUE(n1.bias(0).isZero());
  EXPECT_TRUE(n1.gamma(1).isOnes());
  EXPECT_TRUE(n1.beta(1).isZero());
  EXPECT_TRUE(n1.running_mean(2).isZero());
  EXPECT_TRUE(n1.running_var(2).isOnes());

  RandomStream c(8, 0);
  const Network big = init_network({{400, 300, 1}}, c);
  const auto w = big.weight(0);
  const double var = w.array().square().mean();
  EXPECT_NEAR(var, 2.0 / 400.0, 0.05 * 2.0 / 400.0);
  EXPECT_THROW(init_network({{3}}, c), ConfigError);
  EXPECT_THROW(init_network({{3, 0, 1}}, c), ConfigError);
}

TEST(Forward, ZeroNetworkOutputsZero) {
  const Network net({{3, 5, 2}});
  EXPECT_TRUE(forward(net, Eigen::MatrixXd::Random(3, 7)).isZero(0.0));
}

TEST(Forward, LinearLayerSumsInputs) {
  Network net({{2, 1}});
  net.mutable_weight(0) << 1.0, 1.0;
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, -3, 4, 0.5, 1;
  const Eigen::MatrixXd y = forward(net, x);
  EXPECT_DOUBLE_EQ(y(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 2.5);
  EXPECT_DOUBLE_EQ(y(0, 2), -2.0);
}

TEST(Forward, HandComputedTwoLayerRelu) {
  Network net({{2, 2, 1}});
  net.mutable_weight(0) << 1.0, -2.0, 0.5, 0.25;
  net.mutable_bias(0) << 0.1, -1.0;
  net.mutable_weight(1) << 3.0, -1.5;
  net.mutable_bias(1) << 0.2;
  Eigen::MatrixXd x(2, 1);
  x << 0.3, -0.4;
  // hidden pre-activations: 0.3 + 0.8 + 0.1 = 1.2 and 0.15 - 0.1 - 1 = -0.95
  const double expected = 3.0 * 1.2 - 1.5 * 0.0 + 0.2;
  EXPECT_NEAR(forward(net, x)(0, 0), expected, 1e-12);
  EXPECT_THROW(forward(net, Eigen::MatrixXd::Zero(3, 1)), ConfigError);
}

TEST(Forward, ModesAgreeWithoutBatchnormAndEvalIsPure) {
  RandomStream rng(3, 0);
  Network net = init_network({{4, 9, 9, 3}}, rng);
  const Eigen::MatrixXd x = normals(rng, 4, 11);
  ForwardCache cache;
  const Eigen::MatrixXd train = forward_train(net, x, cache);
  EXPECT_EQ(train, forward(net, x));
  EXPECT_EQ(forward(net, x), forward(net, x));
}

TEST(Forward, BatchnormTrainOutputIsNormalisedThenAffine) {
  RandomStream rng(4, 0);
  NetworkSpec spec{{3, 6, 2}, true};
  Network net = init_network(spec, rng);
  perturb_batchnorm(net, rng);
  const Eigen::MatrixXd x = 5.0 + 3.0 * normals(rng, 3, 257).array();
  ForwardCache cache;
  const Eigen::MatrixXd out = forward_train(net, x, cache);
  const Eigen::VectorXd gamma = net.gamma(2), beta = net.beta(2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double mean = out.row(i).mean();
    const double var = (out.row(i).array() - mean).square().mean();
    EXPECT_NEAR(mean, beta(i), 1e-6);
    // Normalisation divides by sqrt(var + eps), so the variance is gamma^2 var / (var + eps).
    const Eigen::RowVectorXd pre = cache.normalized[2].row(i);
    EXPECT_NEAR((pre.array() - pre.mean()).square().mean(), 1.0, 1e-4);
    EXPECT_NEAR(var, gamma(i) * gamma(i) * (pre.array() - pre.mean()).square().mean(), 1e-6);
  }
}

TEST(Forward, TrainModeUpdatesRunningStatistics) {
  RandomStream rng(5, 0);
  Network net = init_network({{2, 3, 1}, true}, rng);
  const Eigen::MatrixXd x = 2.0 + normals(rng, 2, 64).array();
  ForwardCache cache;
  forward_train(net, x, cache);
  const Eigen::VectorXd mean = x.rowwise().mean();
  EXPECT_LT((net.running_mean(0) - 0.1 * mean).norm(), 1e-12);
  const Eigen::MatrixXd centered = x.colwise() - mean;
  const Eigen::VectorXd unbiased = centered.array().square().rowwise().sum() / 63.0;
  EXPECT_LT((net.running_var(0) - (0.9 * Eigen::VectorXd::Ones(2) + 0.1 * unbiased)).norm(), 1e-12);
  // the cache stays valid for backward after the running-stat update
  EXPECT_NO_THROW(backward(net, cache, Eigen::MatrixXd::Ones(1, 64)));
}

TEST(Backward, LinearLayerInputGradientIsTransposedWeight) {
  RandomStream rng(6, 0);
  Network net = init_network({{3, 2}}, rng);
  const Eigen::MatrixXd x = normals(rng, 3, 4), up = normals(rng, 2, 4);
  ForwardCache cache;
  forward(net, x, cache);
  const Gradients g = backward(net, cache, up);
  EXPECT_LT((g.input - net.weight(0).transpose() * up).norm(), 1e-14);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  RandomStream rng(7, 0);
  Network net = init_network({{3, 5, 2}, true}, rng);
  ForwardCache cache;
  forward_train(net, normals(rng, 3, 8), cache);
  const Gradients g = backward(net, cache, Eigen::MatrixXd::Zero(2, 8));
  EXPECT_TRUE(g.parameters.isZero(0.0));
  EXPECT_TRUE(g.input.isZero(0.0));
}

TEST(Backward, StaleCacheAndShapeErrors) {
  RandomStream rng(8, 0);
  Network net = init_network({{2, 4, 1}}, rng);
  const Eigen::MatrixXd x = normals(rng, 2, 3);
  ForwardCache cache;
  forward(net, x, cache);
  EXPECT_THROW(backward(net, cache, Eigen::MatrixXd::Ones(2, 3)), ConfigError);
  net.mutable_parameters()(0) += 1.0;
  EXPECT_THROW(backward(net, cache, Eigen::MatrixXd::Ones(1, 3)), ConfigError);
  Network other = net;
  forward(other, x, cache);
  EXPECT_THROW(backward(net, cache, Eigen::MatrixXd::Ones(1, 3)), ConfigError);
}

TEST(Backward, ReluDerivativeAtZeroIsZero) {
  Network net({{1, 1, 1}});
  net.mutable_weight(0)(0, 0) = 1.0;
  net.mutable_weight(1)(0, 0) = 1.0;
  ForwardCache cache;
  forward(net, Eigen::MatrixXd::Zero(1, 1), cache);
  const Gradients g = backward(net, cache, Eigen::MatrixXd::Ones(1, 1));
  EXPECT_EQ(g.input(0, 0), 0.0);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNetworks) {
  RandomStream rng(9, 0);
  for (int t = 0; t < 60; ++t) {
    NetworkSpec spec;
    const int layers = 2 + t % 4;
    for (int k = 0; k < layers; ++k) spec.layer_sizes.push_back(1 + static_cast<int>(rng.next_u64() % 6));
    spec.batchnorm = t % 2 == 1;
    spec.output_bn_affine = t % 4 != 3;
    Network net = init_network(spec, rng);
    if (spec.batchnorm) perturb_batchnorm(net, rng);
    const Eigen::Index n = 3 + t % 5;
    const Eigen::MatrixXd x = normals(rng, spec.layer_sizes.front(), n);
    const Eigen::MatrixXd up = normals(rng, spec.layer_sizes.back(), n);
    for (Mode mode : {Mode::Eval, Mode::Train}) {
      const test_support::GradientCheck c = test_support::check_gradients(net, x, up, mode);
      EXPECT_LE(c.max_relative_error, 1e-5) << "trial " << t << " mode " << (mode == Mode::Train ? "train" : "eval");
      EXPECT_GT(c.checked, c.skipped);
    }
  }
}

TEST(Adam, FirstStepOnScalar) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  AdamState state(1);
  const double lr = adam_step(theta, Eigen::VectorXd::Ones(1), state);
  EXPECT_DOUBLE_EQ(lr, 1e-3);
  EXPECT_NEAR(theta(0), -1e-3, 1e-10);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(4, -1, 1);
  const Eigen::VectorXd before = theta;
  AdamState state(4);
  adam_step(theta, Eigen::VectorXd::Zero(4), state);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ScheduleSwitchesAfterBoundary) {
  const LearningRateSchedule s;
  EXPECT_DOUBLE_EQ(s.rate(1), 1e-3);
  EXPECT_DOUBLE_EQ(s.rate(10000), 1e-3);
  EXPECT_DOUBLE_EQ(s.rate(10001), 1e-4);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  AdamState state(1);
  EXPECT_DOUBLE_EQ(adam_step(theta, Eigen::VectorXd::Ones(1), state, 10000), 1e-3);
  EXPECT_DOUBLE_EQ(adam_step(theta, Eigen::VectorXd::Ones(1), state, 10001), 1e-4);
  // without a global step the local counter drives the schedule
  AdamState local(1);
  local.t = 10000;
  EXPECT_DOUBLE_EQ(adam_step(theta, Eigen::VectorXd::Ones(1), local), 1e-4);
}

TEST(Adam, MatchesReferenceRecursion) {
  Eigen::VectorXd theta(2);
  theta << 0.5, -0.2;
  AdamState state(2);
  double m0 = 0, v0 = 0, p0 = 0.5;
  for (int k = 1; k <= 5; ++k) {
    const double g = 0.3 * k - 1.0;
    Eigen::VectorXd grads(2);
    grads << g, 2 * g;
    adam_step(theta, grads, state);
    m0 = 0.9 * m0 + 0.1 * g;
    v0 = 0.999 * v0 + 0.001 * g * g;
    p0 -= 1e-3 * (m0 / (1 - std::pow(0.9, k))) / (std::sqrt(v0 / (1 - std::pow(0.999, k))) + 1e-8);
    EXPECT_NEAR(theta(0), p0, 1e-15);
  }
}

TEST(Adam, RejectsNonFiniteAndShapeMismatch) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  AdamState state(3);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  g(1) = std::numeric_limits<double>::quiet_NaN();
  try {
    adam_step(theta, g, state);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
  EXPECT_THROW(adam_step(theta, Eigen::VectorXd::Zero(2), state), ConfigError);
}

TEST(Adam, MinimisesQuadratic) {
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 1.0);
  AdamState state(3, {1e-2, 1e-3, 100000});
  for (int k = 0; k < 3000; ++k) adam_step(theta, 2.0 * (theta - Eigen::Vector3d(0.5, -0.25, 0.0)), state);
  EXPECT_LT((theta - Eigen::Vector3d(0.5, -0.25, 0.0)).norm(), 1e-3);
}
