#pragma once

// The same ADMM with a matrix variable: the non-convex block projects the
// singular values of X jointly with t onto the epigraph, one pair at a time.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "lpqn/errors.hpp"
#include "lpqn/pqn_admm.hpp"
#include "lpqn/scalar_core.hpp"

namespace lpqn {

/// Thin SVD with descending singular values and the sign of each left
/// singular vector fixed so that its largest-magnitude entry is nonnegative.
struct CanonicalSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd V;

  explicit CanonicalSvd(const Eigen::MatrixXd& A) {
    if (!A.allFinite()) throw SolverError("SVD of a non-finite matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw SolverError("SVD failed to converge");
    U = svd.matrixU();
    sigma = svd.singularValues();
    V = svd.matrixV();
    for (Index k = 0; k < U.cols(); ++k) {
      Index arg = 0;
      U.col(k).cwiseAbs().maxCoeff(&arg);
      if (U(arg, k) < 0.0) {
        U.col(k) = -U.col(k);
        V.col(k) = -V.col(k);
      }
    }
  }
};

struct MatrixXtUpdate {
  Eigen::MatrixXd X;
  Eigen::VectorXd t;
  Eigen::MatrixXd U;       // singular vectors of the input
  Eigen::VectorXd sigma;   // projected singular values, paired with U, V
  Eigen::MatrixXd V;
  Eigen::VectorXd input_sigma;
};

/// Projection of (Xbar, tbar) onto {(X, t) : t_i >= sigma_i(X)^p}. t is paired
/// with the singular values of Xbar in descending order.
inline MatrixXtUpdate matrix_xt_update(const Eigen::MatrixXd& Xbar, const Eigen::VectorXd& tbar, RationalExponent p,
                                       Penalty penalty = Penalty::lp) {
  const Index L = std::min(Xbar.rows(), Xbar.cols());
  if (tbar.size() != L) throw std::invalid_argument("matrix_xt_update: t must have min(m, n) entries");
  CanonicalSvd svd(Xbar);
  MatrixXtUpdate out;
  out.input_sigma = svd.sigma;
  out.sigma.resize(L);
  out.t.resize(L);
  for (Index i = 0; i < L; ++i) {
    const EpigraphPoint pt = penalty == Penalty::l1 ? project_epigraph_l1(svd.sigma(i), tbar(i))
                                                    : project_epigraph(svd.sigma(i), tbar(i), p);
    out.sigma(i) = pt.x;
    out.t(i) = pt.t;
  }
  out.X = svd.U * out.sigma.asDiagonal() * svd.V.transpose();
  out.U = std::move(svd.U);
  out.V = std::move(svd.V);
  return out;
}

inline Index rank_estimate(const Eigen::MatrixXd& X, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("rank_estimate: threshold must be positive");
  if (X.size() == 0) return 0;
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(X).singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) r += s(i) > threshold ? 1 : 0;
  return r;
}

struct MatrixAdmmState {
  Eigen::MatrixXd X, Y, Lambda;
  Eigen::VectorXd t, z, theta;

  static MatrixAdmmState zeros(Index m, Index n) {
    const Index L = std::min(m, n);
    return MatrixAdmmState{Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m, n),
                           Eigen::VectorXd::Zero(L), Eigen::VectorXd::Zero(L), Eigen::VectorXd::Zero(L)};
  }
};

struct MatrixSolveReport {
  Eigen::MatrixXd X;   // iterate with the smallest ||X - Y||_F
  Eigen::MatrixXd Y;
  int iterations = 0;
  int best_iteration = 0;
  bool converged = false;
  std::vector<double> primal_x;
  std::vector<double> primal_t;
  Index rank = 0;      // at cfg.zero_threshold
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  MatrixAdmmState final_state;
};

using MatrixAdmmObserver = std::function<void(int, const MatrixAdmmState&)>;

/// `project` maps an m x n matrix to its Frobenius-nearest point of the convex set.
template <class Projector>
MatrixSolveReport rankmin_solve(const Projector& project, Index m, Index n, const AdmmConfig& cfg,
                                const MatrixAdmmObserver& observer = {}) {
  cfg.validate();
  if (m < 1 || n < 1) throw std::invalid_argument("rankmin_solve: empty matrix");
  const auto start = std::chrono::steady_clock::now();
  MatrixAdmmState s = MatrixAdmmState::zeros(m, n);
  const double rho = cfg.rho;
  MatrixSolveReport rep;
  rep.primal_x.reserve(static_cast<std::size_t>(cfg.max_iters));
  rep.primal_t.reserve(static_cast<std::size_t>(cfg.max_iters));
  double best = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= cfg.max_iters; ++k) {
    MatrixXtUpdate up = matrix_xt_update(s.Y - s.Lambda / rho, s.z - s.theta / rho, cfg.p, cfg.penalty);
    s.X = std::move(up.X);
    s.t = std::move(up.t);
    s.Y = project(Eigen::MatrixXd(s.X + s.Lambda / rho));
    s.z = s.t + (s.theta.array() - 1.0).matrix() / rho;
    const Eigen::MatrixXd rx = s.X - s.Y;
    const Eigen::VectorXd rt = s.t - s.z;
    s.Lambda += rho * rx;
    s.theta += rho * rt;
    if (!s.Y.allFinite() || !s.Lambda.allFinite()) {
      throw SolverError("matrix ADMM: non-finite iterate at iteration " + std::to_string(k));
    }
    const double px = rx.norm();
    const double pt = rt.norm();
    rep.primal_x.push_back(px);
    rep.primal_t.push_back(pt);
    rep.iterations = k;
    if (px <= best) {
      best = px;
      rep.X = s.X;
      rep.Y = s.Y;
      rep.best_iteration = k;
    }
    if (observer) observer(k, s);
    if (cfg.stop_tol > 0.0 && px <= cfg.stop_tol && pt <= cfg.stop_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.rank = rank_estimate(rep.X, cfg.zero_threshold);
  rep.final_state = std::move(s);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Nuclear-norm counterpart: same loop with the p = 1 singular-value update.
template <class Projector>
MatrixSolveReport nuclear_baseline_solve(const Projector& project, Index m, Index n, AdmmConfig cfg,
                                         const MatrixAdmmObserver& observer = {}) {
  cfg.penalty = Penalty::l1;
  return rankmin_solve(project, m, n, cfg, observer);
}

/// ||X - M||_F / ||M||_F
inline double relative_frobenius_distance(const Eigen::MatrixXd& X, const Eigen::MatrixXd& M) {
  return (X - M).norm() / M.norm();
}

/// ||sigma(X) - sigma(M)|| / ||sigma(M)||
inline double relative_singular_value_error(const Eigen::MatrixXd& X, const Eigen::MatrixXd& M) {
  const Eigen::VectorXd sx = Eigen::BDCSVD<Eigen::MatrixXd>(X).singularValues();
  const Eigen::VectorXd sm = Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
  return (sx - sm).norm() / sm.norm();
}

}  // namespace lpqn
