#include <gtest/gtest.h>

#include <cmath>

#include "optinet/optimizers.hpp"

using namespace optinet;

namespace {

GradientOracle half_norm_squared(std::size_t dim) { return quadratic_oracle(Matrix::identity(dim), Vector(dim)); }

StopRule within(double eps, const Vector& target, std::size_t max_iters = 1'000'000) {
  StopRule s;
  s.max_iters = max_iters;
  s.record = false;
  const double scale = eps;
  s.converged = [target, scale](const Vector& z) { return norm(z - target) <= scale; };
  return s;
}

}  // namespace

TEST(ThetaSchedule, FirstValues) {
  ThetaSchedule t;
  EXPECT_DOUBLE_EQ(t[0], 1.0);
  const double t1 = t.next();
  EXPECT_NEAR(t1, (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
  const double t2 = t.next();
  // (1 - t2) / t2^2 = 1 / t1^2  <=>  t2^2 + t1^2 t2 - t1^2 = 0
  const double a = t1 * t1;
  EXPECT_NEAR(t2, (-a + std::sqrt(a * a + 4 * a)) / 2.0, 1e-15);
  EXPECT_NEAR(t2, 0.4559, 1e-4);
  EXPECT_EQ(t.momentum(0), 0.0);
  EXPECT_EQ(t.momentum(1), 0.0);
}

TEST(ThetaSchedule, SatisfiesRecurrence) {
  ThetaSchedule t;
  t.ensure(50);
  for (std::size_t k = 1; k <= 50; ++k) {
    EXPECT_NEAR((1 - t[k]) / (t[k] * t[k]), 1 / (t[k - 1] * t[k - 1]), 1e-9 / (t[k] * t[k]));
  }
}

TEST(HCoefficients, FirstRows) {
  ThetaSchedule t;
  t.ensure(3);
  HCoefficients h;
  h.extend(t);
  h.extend(t);
  EXPECT_DOUBLE_EQ(h(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(h(2, 0), 0.0);
  const double c2 = t[2] * (1 - t[1]) / t[1];
  EXPECT_NEAR(h(2, 1), 1 + c2, 1e-15);
  EXPECT_NEAR(h(2, 1), 1.2818, 1e-4);
}

TEST(HCoefficients, HistoryFormReproducesExtrapolationForm) {
  // Independent check: unroll y_{k+1} = y_k - sum_j h_{k+1,j} g_j on a scalar
  // quadratic against the two-sequence Nesterov iteration.
  const double a = 0.3;
  ThetaSchedule t;
  t.ensure(40);
  HCoefficients h;
  std::vector<double> ys{2.0};
  std::vector<double> grads;
  double z_prev = 2.0;
  double z = 2.0;
  double y = 2.0;
  for (std::size_t k = 0; k < 30; ++k) {
    grads.push_back(a * ys.back());
    h.extend(t);
    double next = ys.back();
    for (std::size_t j = 0; j <= k; ++j) next -= h(k + 1, j) * grads[j];
    ys.push_back(next);

    z_prev = z;
    z = y - a * y;
    y = z + t.momentum(k + 1) * (z - z_prev);
    EXPECT_NEAR(ys.back(), y, 1e-13) << "k=" << k;
  }
}

TEST(Algorithms, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::gd, Algorithm::hb, Algorithm::agd, Algorithm::agd2, Algorithm::admm}) {
    EXPECT_EQ(algorithm_from_name(algorithm_name(a)), a);
  }
  EXPECT_THROW(algorithm_from_name("adam"), ParameterError);
}

TEST(Algorithms, GdSolvesHalfNormInOneStep) {
  OptimizerState s(AlgoConfig::gd(), Vector{3, -1, 2});
  s.step(half_norm_squared(3));
  EXPECT_EQ(s.primary(), Vector(3));
}

TEST(Algorithms, HeavyBallWithZeroMomentumIsGd) {
  RngStream rng(4);
  const GradientOracle f = quadratic_oracle(random_spd(6, 0.1, 1.0, rng), gaussian(6, rng));
  const Vector z0 = gaussian(6, rng);
  StopRule stop;
  stop.max_iters = 25;
  const Trajectory gd = run(AlgoConfig::gd(), f, z0, stop);
  const Trajectory hb = run(AlgoConfig::hb(0.0), f, z0, stop);
  ASSERT_EQ(gd.iterates.size(), hb.iterates.size());
  for (std::size_t k = 0; k < gd.iterates.size(); ++k) EXPECT_EQ(gd.iterates[k], hb.iterates[k]);
}

TEST(Algorithms, AgdFirstStepIsGdStep) {
  RngStream rng(8);
  const GradientOracle f = quadratic_oracle(random_spd(5, 0.1, 1.0, rng), gaussian(5, rng));
  const Vector z0 = gaussian(5, rng);
  OptimizerState agd(AlgoConfig::agd(), z0);
  agd.step(f);
  EXPECT_EQ(agd.z(), z0 - f.gradient(z0));
}

TEST(Algorithms, Agd2TracksAgdExtrapolatedPoint) {
  RngStream rng(13);
  const GradientOracle f = quadratic_oracle(random_spd(8, 0.05, 1.0, rng), gaussian(8, rng));
  const Vector z0 = gaussian(8, rng);
  OptimizerState agd(AlgoConfig::agd(), z0);
  OptimizerState agd2(AlgoConfig::agd2(), z0);
  for (int k = 0; k < 40; ++k) {
    agd.step(f);
    agd2.step(f);
    EXPECT_LE(norm(agd.y() - agd2.y()), 1e-12 * (1 + norm(agd.y())));
  }
}

TEST(Algorithms, ZeroIterationsReturnStart) {
  const Vector z0{1, 2};
  StopRule stop;
  stop.max_iters = 0;
  for (auto cfg : {AlgoConfig::gd(), AlgoConfig::hb(), AlgoConfig::agd(), AlgoConfig::agd2(), AlgoConfig::admm()}) {
    const Trajectory t = run(cfg, half_norm_squared(2), z0, stop);
    ASSERT_EQ(t.iterates.size(), 1u);
    EXPECT_EQ(t.iterates[0], z0);
  }
}

TEST(Algorithms, GdIterationCountFollowsContractionRate) {
  const Matrix a{{1, 0}, {0, 0.01}};
  const Vector z0{1, 1};
  const double eps = 1e-6;
  const Trajectory gd = run(AlgoConfig::gd(), quadratic_oracle(a, Vector(2)), z0, within(eps, Vector(2)));
  ASSERT_TRUE(gd.converged);
  const double kappa = 100;
  const double l = std::log(norm(z0) / eps);
  EXPECT_GE(static_cast<double>(gd.iterations), kappa * l / 2);
  EXPECT_LE(static_cast<double>(gd.iterations), 2 * kappa * l);

  const Trajectory agd = run(AlgoConfig::agd(), quadratic_oracle(a, Vector(2)), z0, within(eps, Vector(2)));
  ASSERT_TRUE(agd.converged);
  EXPECT_LT(agd.iterations, gd.iterations);
}

TEST(Algorithms, AdmmZStepMatchesHandExpansion) {
  // One step from y0 = z0, lambda0 = 0 on |z|^2/2 (gradient = z):
  // z1 = (z0 - z0 + y0) / 2 = z0 / 2, y1 = (y0 - y0 + z1) / 2 = z0 / 4.
  const Vector z0{2, -4};
  OptimizerState s(AlgoConfig::admm(), z0);
  s.step(half_norm_squared(2));
  EXPECT_EQ(s.z(), (Vector{1, -2}));
  EXPECT_EQ(s.y(), (Vector{0.5, -1}));
  EXPECT_EQ(s.lambda(), (Vector{0.5, -1}));
}

TEST(Algorithms, AllConvergeOnWellConditionedQuadratic) {
  RngStream rng(17);
  const Matrix a = random_spd(10, 0.2, 1.0, rng);
  const Vector zstar = gaussian(10, rng);
  const Vector b = a * zstar;
  const Vector z0 = gaussian(10, rng);
  for (auto cfg : {AlgoConfig::gd(), AlgoConfig::hb(tuned_heavy_ball_beta(5.0)), AlgoConfig::agd(),
                   AlgoConfig::agd2(), AlgoConfig::admm(), AlgoConfig::agd_strongly_convex(1.0, 0.2)}) {
    const Trajectory t = run(cfg, quadratic_oracle(a, b), z0, within(1e-8, zstar, 100000));
    EXPECT_TRUE(t.converged) << algorithm_name(cfg.algorithm);
  }
}

TEST(Algorithms, MomentumFormulas) {
  EXPECT_NEAR(strongly_convex_momentum(1.0, 0.01), (1 - 0.1) / (1 + 0.1), 1e-15);
  EXPECT_NEAR(tuned_heavy_ball_beta(100.0), std::pow(9.0 / 11.0, 2), 1e-15);
}

TEST(Algorithms, DimensionMismatchThrows) {
  OptimizerState s(AlgoConfig::gd(), Vector(3));
  EXPECT_THROW(s.step(half_norm_squared(2)), DimensionError);
}
