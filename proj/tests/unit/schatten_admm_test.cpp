#include "lpqn/schatten_admm.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "lpqn/convex_proj.hpp"
#include "lpqn/datagen.hpp"

namespace lpqn {
namespace {

const RationalExponent kHalf(1, 2);

double xt_objective(const MatrixXtUpdate& up, const Eigen::MatrixXd& Xb, const Eigen::VectorXd& tb) {
  return (up.X - Xb).squaredNorm() + (up.t - tb).squaredNorm();
}

TEST(CanonicalSvd, SortedAndSignFixed) {
  CounterRng rng(3, "test.svd");
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd A = rng.normal_matrix(5, 3);
    const CanonicalSvd s(A);
    for (Index k = 1; k < s.sigma.size(); ++k) EXPECT_GE(s.sigma(k - 1), s.sigma(k));
    for (Index k = 0; k < s.U.cols(); ++k) {
      Index arg = 0;
      s.U.col(k).cwiseAbs().maxCoeff(&arg);
      EXPECT_GE(s.U(arg, k), 0.0);
    }
    EXPECT_LE((s.U * s.sigma.asDiagonal() * s.V.transpose() - A).norm(), 1e-12 * (1.0 + A.norm()));
    const CanonicalSvd s2(-A);
    EXPECT_LE((s2.U - s.U).norm(), 1e-10);  // sign of U fixed, V absorbs the flip
  }
}

TEST(MatrixXtUpdate, ZeroInput) {
  const Eigen::Vector3d tb(-1.0, 0.5, 2.0);
  const MatrixXtUpdate up = matrix_xt_update(Eigen::MatrixXd::Zero(3, 4), tb, kHalf);
  EXPECT_EQ(up.X.norm(), 0.0);
  EXPECT_EQ(up.t, Eigen::Vector3d(0.0, 0.5, 2.0));
}

TEST(MatrixXtUpdate, DiagonalInputMatchesScalarProjection) {
  const Eigen::Vector3d d(3.0, 0.7, 0.05);
  const Eigen::Vector3d tb(0.2, -0.4, 1.0);
  const MatrixXtUpdate up = matrix_xt_update(Eigen::MatrixXd(d.asDiagonal()), tb, kHalf);
  for (Index i = 0; i < 3; ++i) {
    const EpigraphPoint pt = project_epigraph(d(i), tb(i), kHalf);
    EXPECT_NEAR(up.X(i, i), pt.x, 1e-12);
    EXPECT_NEAR(up.t(i), pt.t, 1e-12);
  }
  EXPECT_NEAR((up.X - Eigen::MatrixXd(up.X.diagonal().asDiagonal())).norm(), 0.0, 1e-12);
  const MatrixXtUpdate l1 = matrix_xt_update(Eigen::MatrixXd(d.asDiagonal()), tb, kHalf, Penalty::l1);
  for (Index i = 0; i < 3; ++i) {
    const EpigraphPoint pt = project_epigraph_l1(d(i), tb(i));
    EXPECT_NEAR(l1.X(i, i), pt.x, 1e-12);
    EXPECT_NEAR(l1.t(i), pt.t, 1e-12);
  }
}

TEST(MatrixXtUpdate, RandomProbeNeverImproves) {
  CounterRng rng(11, "test.probe");
  const Eigen::MatrixXd Xb = rng.normal_matrix(3, 3);
  const Eigen::Vector3d tb(rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 2));
  const MatrixXtUpdate up = matrix_xt_update(Xb, tb, kHalf);
  const double best = xt_objective(up, Xb, tb);
  for (int k = 0; k < 10000; ++k) {
    const double scale = std::pow(10.0, rng.uniform(-4.0, 0.0));
    const Eigen::MatrixXd Xp = up.X + scale * rng.normal_matrix(3, 3);
    const Eigen::VectorXd sp = Eigen::BDCSVD<Eigen::MatrixXd>(Xp).singularValues();
    Eigen::VectorXd tp = up.t + scale * rng.normal_vector(3);
    for (Index j = 0; j < 3; ++j) tp(j) = std::max(tp(j), std::sqrt(sp(j)));
    const double val = (Xp - Xb).squaredNorm() + (tp - tb).squaredNorm();
    ASSERT_GE(val, best - 1e-8) << "probe " << k;
  }
}

TEST(MatrixXtUpdate, PreservesSingularSubspacesAndReducedObjective) {
  CounterRng rng(12, "test.subspace");
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd Xb = rng.normal_matrix(6, 4);
    Eigen::VectorXd tb(4);
    for (Index k = 0; k < 4; ++k) tb(k) = rng.uniform(-1.0, 2.0);
    const MatrixXtUpdate up = matrix_xt_update(Xb, tb, kHalf);
    const Eigen::MatrixXd D = up.U.transpose() * up.X * up.V;
    EXPECT_LE((D - Eigen::MatrixXd(up.sigma.asDiagonal())).norm(), 1e-8);
    double reduced = (up.t - tb).squaredNorm();
    for (Index k = 0; k < 4; ++k) reduced += std::pow(up.sigma(k) - up.input_sigma(k), 2);
    EXPECT_NEAR(xt_objective(up, Xb, tb), reduced, 1e-10 * (1.0 + reduced));
    for (Index k = 0; k < 4; ++k) {
      EXPECT_GE(up.sigma(k), 0.0);
      EXPECT_LE(std::sqrt(up.sigma(k)), up.t(k) + 1e-12);
    }
  }
}

TEST(MatrixXtUpdate, RejectsWrongTLength) {
  EXPECT_THROW(matrix_xt_update(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), kHalf), std::invalid_argument);
}

TEST(RankEstimate, Examples) {
  EXPECT_EQ(rank_estimate(Eigen::MatrixXd::Identity(3, 3), 0.5), 3);
  EXPECT_EQ(rank_estimate(Eigen::MatrixXd::Zero(4, 3), 1e-4), 0);
  const Eigen::MatrixXd D = Eigen::Vector2d(1.0, 1e-5).asDiagonal();
  EXPECT_EQ(rank_estimate(D, 1e-4), 1);
  EXPECT_EQ(rank_estimate(D, 1e-6), 2);
}

TEST(RankminSolve, SingletonTargetIsRecovered) {
  CounterRng rng(4, "test.singleton");
  const Eigen::MatrixXd X0 = rng.normal_matrix(5, 2) * rng.normal_matrix(2, 4);
  const auto project = [&](const Eigen::MatrixXd&) { return X0; };
  AdmmConfig c;
  c.max_iters = 3000;
  const MatrixSolveReport lp = rankmin_solve(project, 5, 4, c);
  EXPECT_LE((lp.X - X0).norm(), 1e-6 * X0.norm());
  const MatrixSolveReport nuc = nuclear_baseline_solve(project, 5, 4, c);
  EXPECT_LE((nuc.X - X0).norm(), 1e-6 * X0.norm());
  EXPECT_EQ(lp.rank, 2);
}

TEST(Metrics, ZeroEstimateHasUnitDistance) {
  CounterRng rng(6, "test.metrics");
  const Eigen::MatrixXd M = rng.normal_matrix(4, 4);
  EXPECT_DOUBLE_EQ(relative_frobenius_distance(Eigen::MatrixXd::Zero(4, 4), M), 1.0);
  EXPECT_NEAR(relative_singular_value_error(Eigen::MatrixXd::Zero(4, 4), M), 1.0, 1e-15);
  EXPECT_EQ(relative_frobenius_distance(M, M), 0.0);
}

TEST(RankminSolve, SysidOrderTwoTrackedAndBelowNuclear) {
  const HankelShape shape = HankelShape::near_square(40);
  double pqn = 0.0, nuc = 0.0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    const SysidInstance inst = gen_sysid_instance(2, 50, 50, 40, 300 + static_cast<std::uint64_t>(s));
    const HankelResidualProjector P(inst.T, inst.yhat, std::pow(1.1 * inst.noise.norm(), 2), shape);
    const auto project = [&](const Eigen::MatrixXd& Z) { return P(Z).X; };
    AdmmConfig c;
    c.max_iters = 1000;
    c.zero_threshold = 1e-4;
    pqn += static_cast<double>(rankmin_solve(project, shape.rows, shape.cols, c).rank);
    nuc += static_cast<double>(nuclear_baseline_solve(project, shape.rows, shape.cols, c).rank);
  }
  pqn /= runs;
  nuc /= runs;
  EXPECT_GE(pqn, 1.0);
  EXPECT_LE(pqn, 4.0);
  EXPECT_LE(pqn, nuc);
}

TEST(RankminSolve, CompletionRecoversRankOnMostSeeds) {
  int hits = 0;
  const int runs = 10;
  for (int s = 0; s < runs; ++s) {
    const CompletionInstance inst = gen_completion_instance(40, 40, 3, 0.1, 0.195, 500 + static_cast<std::uint64_t>(s));
    const SamplingBallProjector P(40, 40, inst.omega, inst.b, 0.1 * std::sqrt(static_cast<double>(inst.omega.size())));
    AdmmConfig c;
    c.rho = 0.3;
    c.max_iters = 1000;
    c.zero_threshold = 1e-4;
    hits += rankmin_solve(P, 40, 40, c).rank == 3 ? 1 : 0;
  }
  EXPECT_GE(hits, 8);
}

}  // namespace
}  // namespace lpqn
