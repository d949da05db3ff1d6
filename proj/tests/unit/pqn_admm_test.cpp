#include "lpqn/pqn_admm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "lpqn/convex_proj.hpp"
#include "lpqn/datagen.hpp"

namespace lpqn {
namespace {

TEST(SparsityCount, Examples) {
  EXPECT_EQ(sparsity_count(Eigen::Vector3d(0.0, 1e-9, 0.5), 1e-6), 1);
  EXPECT_EQ(sparsity_count(Eigen::VectorXd::Zero(5), 1e-6), 0);
  EXPECT_EQ(sparsity_count(Eigen::VectorXd::Constant(8, 1.0 / std::sqrt(8.0)), 1e-6), 8);
  EXPECT_THROW(sparsity_count(Eigen::VectorXd::Zero(2), 0.0), std::invalid_argument);
}

TEST(AdmmConfig, RejectsBadParameters) {
  AdmmConfig c;
  c.rho = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdmmConfig{};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdmmConfig{};
  c.zero_threshold = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdmmConfig{};
  c.stop_tol = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SvrSolve, SingletonTargetIsReached) {
  const Eigen::VectorXd x0 = (Eigen::VectorXd(4) << 1.5, 0.0, -1.25, 3.0).finished();
  const auto singleton = [&](const Eigen::VectorXd&) { return x0; };
  for (Penalty pen : {Penalty::lp, Penalty::l1}) {
    AdmmConfig c;
    c.penalty = pen;
    c.max_iters = 3000;
    const SolveReport rep = svr_solve(singleton, 4, c);
    EXPECT_LE((rep.x - x0).norm(), 1e-6) << static_cast<int>(pen);
    EXPECT_LE(rep.primal_x[static_cast<std::size_t>(rep.best_iteration - 1)], 1e-6);
  }
}

TEST(SvrSolve, LpCanStallOnEntriesBelowTheProxThreshold) {
  // At rho = 1 the entry -0.25 sits below the scalar prox threshold; the lp
  // iteration cycles with that entry at zero while l1 reaches the target.
  const Eigen::VectorXd x0 = (Eigen::VectorXd(4) << 1.5, 0.0, -0.25, 3.0).finished();
  const auto singleton = [&](const Eigen::VectorXd&) { return x0; };
  AdmmConfig c;
  c.max_iters = 3000;
  EXPECT_NEAR((svr_solve(singleton, 4, c).x - x0).norm(), 0.25, 1e-9);
  c.penalty = Penalty::l1;
  EXPECT_LE((svr_solve(singleton, 4, c).x - x0).norm(), 1e-6);
}

TEST(SvrSolve, DegeneratePointSetWithL1) {
  const Eigen::Vector2d target(0.5, 0.0);
  const auto project = [&](const Eigen::VectorXd&) -> Eigen::VectorXd { return target; };
  AdmmConfig c;
  c.penalty = Penalty::l1;
  c.max_iters = 2000;
  const SolveReport rep = svr_solve(project, 2, c);
  EXPECT_NEAR(rep.x(0), 0.5, 1e-6);
  EXPECT_NEAR(rep.x(1), 0.0, 1e-6);
}

struct Trace {
  std::vector<AdmmState> states;
};

TEST(SvrSolve, IterationInvariants) {
  CounterRng rng(5, "test.admm");
  const Eigen::MatrixXd U = rng.normal_matrix(6, 12);
  const Eigen::VectorXd v = rng.normal_vector(6);
  const ResidualBallProjector P = ResidualBallProjector::relative(U, v, 0.1);
  AdmmConfig c;
  c.max_iters = 200;
  c.rho = 2.0;
  Trace tr;
  const SolveReport rep = svr_solve(P, 12, c, std::nullopt, [&](int, const AdmmState& s) { tr.states.push_back(s); });
  ASSERT_EQ(tr.states.size(), 200u);
  EXPECT_EQ(rep.primal_x.size(), 200u);
  EXPECT_EQ(rep.primal_t.size(), 200u);
  const double pv = c.p.value();
  AdmmState prev = AdmmState::zeros(12);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const AdmmState& s = tr.states[k];
    for (Index i = 0; i < 12; ++i) {
      EXPECT_LE(std::pow(std::abs(s.x(i)), pv) - s.t(i), 1e-12 * (1.0 + std::abs(s.t(i))));
    }
    const Eigen::VectorXd z_expected = s.t + (prev.theta.array() - 1.0).matrix() / c.rho;
    EXPECT_EQ(s.z, z_expected);
    const Eigen::VectorXd lambda_expected = prev.lambda + c.rho * (s.x - s.y);
    EXPECT_EQ(s.lambda, lambda_expected);
    EXPECT_LE(P.residual(s.y), P.radius() * (1.0 + 1e-10) + 1e-12);
    prev = s;
  }
  // The reported iterate is the one with the smallest primal residual.
  const auto best = std::min_element(rep.primal_x.begin(), rep.primal_x.end());
  EXPECT_EQ(rep.primal_x[static_cast<std::size_t>(rep.best_iteration - 1)], *best);
}

TEST(SvrSolve, ThetaIsOneAfterFirstIteration) {
  const auto project = [](const Eigen::VectorXd& z) { return Eigen::VectorXd(z.cwiseMax(-1.0).cwiseMin(1.0)); };
  AdmmConfig c;
  c.max_iters = 5;
  std::vector<Eigen::VectorXd> thetas;
  svr_solve(project, 3, c, std::nullopt, [&](int, const AdmmState& s) { thetas.push_back(s.theta); });
  for (const auto& th : thetas) EXPECT_LE((th.array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(SvrSolve, InitialStateIsUsedAndChecked) {
  const auto project = [](const Eigen::VectorXd& z) { return z; };
  AdmmConfig c;
  c.max_iters = 1;
  AdmmState bad = AdmmState::zeros(2);
  EXPECT_THROW(svr_solve(project, 3, c, bad), std::invalid_argument);
  AdmmState init = AdmmState::zeros(3);
  init.y = Eigen::Vector3d(4.0, 0.0, 0.0);
  init.z = Eigen::Vector3d(2.0, 0.0, 0.0);
  const SolveReport a = svr_solve(project, 3, c, init);
  const SolveReport b = svr_solve(project, 3, c);
  EXPECT_GT(a.x.norm(), 0.0);
  EXPECT_EQ(b.x.norm(), 0.0);
}

TEST(SvrSolve, StopToleranceEndsEarly) {
  const Eigen::VectorXd x0 = Eigen::Vector2d(1.0, 0.0);
  const auto project = [&](const Eigen::VectorXd&) { return x0; };
  AdmmConfig c;
  c.max_iters = 100000;
  c.stop_tol = 1e-9;
  const SolveReport rep = svr_solve(project, 2, c);
  EXPECT_TRUE(rep.converged);
  EXPECT_LT(rep.iterations, 100000);
  EXPECT_LE(rep.primal_x.back(), 1e-9);
}

TEST(SvrSolve, NonFiniteProjectionIsReported) {
  const auto project = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd y = z;
    y(0) = std::numeric_limits<double>::quiet_NaN();
    return y;
  };
  AdmmConfig c;
  c.max_iters = 3;
  EXPECT_THROW(svr_solve(project, 2, c), SolverError);
}

// min ||x||_1 s.t. U x = v has a minimizer at a basic solution; enumerate them.
double basis_pursuit_reference(const Eigen::MatrixXd& U, const Eigen::VectorXd& v) {
  const Index m = U.rows(), n = U.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == m) {
      Eigen::MatrixXd B(m, m);
      for (Index k = 0; k < m; ++k) B.col(k) = U.col(idx[static_cast<std::size_t>(k)]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
      if (lu.rank() < m) return;
      best = std::min(best, lu.solve(v).lpNorm<1>());
      return;
    }
    for (Index j = start; j < n; ++j) {
      idx[static_cast<std::size_t>(depth)] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

TEST(SvrSolve, L1PathMatchesBasisPursuitOnAffineSet) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CounterRng rng(seed, "test.bp");
    const Eigen::MatrixXd U = rng.normal_matrix(3, 7);
    const Eigen::VectorXd v = rng.normal_vector(3);
    const ResidualBallProjector P(U, v, 0.0);
    AdmmConfig c;
    c.penalty = Penalty::l1;
    c.max_iters = 20000;
    c.stop_tol = 1e-12;
    const SolveReport rep = svr_solve(P, 7, c);
    const double ref = basis_pursuit_reference(U, v);
    EXPECT_LE(std::abs(rep.x.lpNorm<1>() - ref), 1e-4) << "seed " << seed;
    EXPECT_LE((U * rep.x - v).norm(), 1e-6) << "seed " << seed;
  }
}

TEST(SvrSolve, ScaledInstanceLpIsSparserThanL1) {
  int wins = 0;
  const int runs = 50;
  for (int s = 0; s < runs; ++s) {
    const SvrInstance inst = gen_sparse_binary_instance(64, 16, 0.2, 0.1, 1000 + static_cast<std::uint64_t>(s));
    const double vn = inst.v.norm();
    const ResidualBallProjector P(inst.U, inst.v, 1.05 * inst.noise.norm() / vn * vn);
    AdmmConfig c;
    c.rho = 30.0;
    c.max_iters = 20000;
    c.stop_tol = 1e-10;
    const SolveReport lp = svr_solve(P, 64, c);
    c.penalty = Penalty::l1;
    const SolveReport l1 = svr_solve(P, 64, c);
    wins += lp.sparsity <= l1.sparsity ? 1 : 0;
  }
  EXPECT_GE(wins, 35);
}

}  // namespace
}  // namespace lpqn
