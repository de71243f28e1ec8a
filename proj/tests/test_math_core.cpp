#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "deepcv/errors.hpp"
#include "deepcv/linalg.hpp"
#include "deepcv/moments.hpp"
#include "deepcv/normal.hpp"
#include "deepcv/parallel.hpp"
#include "deepcv/random.hpp"

using namespace deepcv;

TEST(RandomStream, SameKeyGivesIdenticalSequence) {
  const auto a = standard_normals(RandomStream(42, 3), 1000);
  const auto b = standard_normals(RandomStream(42, 3), 1000);
  EXPECT_EQ(a, b);
}

TEST(RandomStream, DistinctStreamsDiffer) {
  const auto a = standard_normals(RandomStream(42, 3), 1000);
  const auto b = standard_normals(RandomStream(42, 4), 1000);
  const auto c = standard_normals(RandomStream(43, 3), 1000);
  EXPECT_NE(a, b);
  EXPECT_NE(a, c);
}

TEST(RandomStream, SubstreamDoesNotAdvanceParent) {
  RandomStream s(5, 1);
  const RandomStream child = s.substream(9);
  (void)child;
  RandomStream fresh(5, 1);
  EXPECT_EQ(s.next_u64(), fresh.next_u64());
  EXPECT_EQ(standard_normals(RandomStream(5, 1).substream(9), 10), standard_normals(child, 10));
}

TEST(RandomStream, IndependentSubstreamsAreUncorrelated) {
  const std::size_t n = 100000;
  const auto a = standard_normals(RandomStream(1, 0).substream(0), n);
  const auto b = standard_normals(RandomStream(1, 0).substream(1), n);
  BivariateMoments m;
  for (std::size_t i = 0; i < n; ++i) m.add(a[i], b[i]);
  EXPECT_LT(std::abs(m.correlation()), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(RandomStream, MillionDrawsHaveStandardMoments) {
  const auto x = standard_normals(RandomStream(2024, 7), 1000000);
  SampleMoments m;
  m.add(x);
  EXPECT_NEAR(m.mean(), 0.0, 0.005);
  EXPECT_NEAR(m.variance(), 1.0, 0.01);
}

TEST(RandomStream, KolmogorovSmirnovBelowOnePercentCritical) {
  const std::size_t n = 100000;
  auto x = standard_normals(RandomStream(99, 0), n);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(RandomStream, UniformsInOpenInterval) {
  RandomStream s(0, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Cholesky, IdentityIsItsOwnFactor) {
  const auto c = cholesky(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_TRUE(c.matrix.isApprox(Eigen::MatrixXd::Identity(2, 2), 0.0));
  EXPECT_TRUE(c.is_diagonal());
}

TEST(Cholesky, ScaledIdentity) {
  const auto c = cholesky(4.0 * Eigen::MatrixXd::Identity(2, 2));
  EXPECT_DOUBLE_EQ(c.matrix(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(c.matrix(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(c.matrix(1, 0), 0.0);
}

TEST(Cholesky, TwoByTwoExample) {
  Eigen::MatrixXd s(2, 2);
  s << 2, 1, 1, 2;
  const auto c = cholesky(s);
  EXPECT_NEAR(c.matrix(0, 0), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(c.matrix(1, 0), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(c.matrix(1, 1), std::sqrt(1.5), 1e-14);
  EXPECT_DOUBLE_EQ(c.matrix(0, 1), 0.0);
  EXPECT_LT((c.matrix * c.matrix.transpose() - s).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cholesky, RandomSpdRoundTrip) {
  RandomStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 12;
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = rng.next_normal();
    const Eigen::MatrixXd s = a.transpose() * a + 1e-3 * Eigen::MatrixXd::Identity(d, d);
    const auto c = cholesky(s);
    const double norm = s.cwiseAbs().rowwise().sum().maxCoeff();
    const double err = (c.matrix * c.matrix.transpose() - s).cwiseAbs().rowwise().sum().maxCoeff();
    EXPECT_LE(err, 1e-10 * norm) << "d=" << d;
    for (int i = 0; i < d; ++i) EXPECT_GT(c.matrix(i, i), 0.0);
  }
}

TEST(Cholesky, NotPositiveDefiniteNamesPivot) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 0, 0, 0, 1, 2, 0, 2, 1;
  try {
    cholesky(s);
    FAIL() << "expected DecompositionError";
  } catch (const DecompositionError& e) {
    EXPECT_NE(std::string(e.what()).find("pivot 2"), std::string::npos) << e.what();
  }
}

TEST(Cholesky, TriangularSolves) {
  Eigen::MatrixXd s(3, 3);
  s << 4, 2, 0.4, 2, 3, 0.5, 0.4, 0.5, 2;
  const auto c = cholesky(s);
  const Eigen::Vector3d b(1, -2, 0.5);
  EXPECT_LT((c.matrix * c.solve(b) - b).norm(), 1e-13);
  EXPECT_LT((c.matrix.transpose() * c.solve_transposed(b) - b).norm(), 1e-13);
  const Eigen::MatrixXd block = Eigen::MatrixXd::Random(3, 5);
  EXPECT_LT((c.apply(block) - c.matrix * block).norm(), 1e-13);
}

TEST(NormalCdf, SymmetryAndKnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959964), 0.975, 1e-6);
  for (double x = -8.0; x <= 8.0; x += 0.37) EXPECT_NEAR(normal_cdf(x), 1.0 - normal_cdf(-x), 1e-15);
}

TEST(NormalCdf, MatchesQuadratureOfDensity) {
  // Simpson's rule on [0, x] added to 1/2.
  for (double x : {0.3, 1.0, 2.5, -1.7}) {
    const int n = 2000;
    const double h = x / n;
    double s = normal_pdf(0.0) + normal_pdf(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * normal_pdf(i * h);
    EXPECT_NEAR(normal_cdf(x), 0.5 + s * h / 3.0, 1e-12);
  }
}

TEST(NormalQuantile, InvertsCdf) {
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 * std::max(1.0, p / (1 - p)));
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
}

TEST(ChiSquaredQuantile, NineDegreesOfFreedom) {
  EXPECT_NEAR(chi_squared_quantile(0.975, 9), 19.0228, 1e-4);
  EXPECT_NEAR(chi_squared_quantile(0.025, 9), 2.7004, 1e-4);
}

TEST(StudentT, TableValues) {
  EXPECT_NEAR(student_t_quantile(0.975, 1), 12.7062, 1e-4);
  EXPECT_NEAR(student_t_quantile(0.975, 9), 2.2622, 1e-4);
}

TEST(SampleMoments, MergeEqualsConcatenation) {
  RandomStream rng(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    SampleMoments a, b, all;
    const int na = 1 + trial * 37, nb = 3 + trial * 11;
    for (int i = 0; i < na; ++i) {
      const double x = 1e3 + rng.next_normal();
      a.add(x);
      all.add(x);
    }
    for (int i = 0; i < nb; ++i) {
      const double x = 1e3 + 5.0 * rng.next_normal();
      b.add(x);
      all.add(x);
    }
    a.merge(b);
    EXPECT_EQ(a.count(), all.count());
    EXPECT_NEAR(a.mean(), all.mean(), 1e-10 * std::abs(all.mean()));
    EXPECT_NEAR(a.variance(), all.variance(), 1e-10 * all.variance());
  }
}

TEST(SampleMoments, KnownValuesAndEmptyMerge) {
  SampleMoments m;
  for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
  EXPECT_DOUBLE_EQ(m.mean(), 2.5);
  EXPECT_DOUBLE_EQ(m.variance(), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.population_variance(), 1.25);
  SampleMoments empty;
  m.merge(empty);
  EXPECT_EQ(m.count(), 4u);
  empty.merge(m);
  EXPECT_DOUBLE_EQ(empty.variance(), m.variance());
}

TEST(BivariateMoments, CovarianceAndMerge) {
  RandomStream rng(8, 0);
  BivariateMoments a, b, all;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.next_normal(), y = 2.0 * x + 0.1 * rng.next_normal();
    (i < 400 ? a : b).add(x, y);
    all.add(x, y);
  }
  a.merge(b);
  EXPECT_NEAR(a.covariance(), all.covariance(), 1e-12);
  EXPECT_NEAR(a.variance_y(), all.variance_y(), 1e-12);
  EXPECT_GT(all.correlation(), 0.99);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 50) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
