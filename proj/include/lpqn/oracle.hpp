#pragma once

// Brute-force reference computations. None of these share a code path with
// the solvers they check: scalar maps are checked against dense grids,
// projections against KKT residuals or exhaustive active-set enumeration,
// gradients against central differences.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "lpqn/linops.hpp"
#include "lpqn/scalar_core.hpp"

namespace lpqn {

struct GridSpec {
  double lo = -50.0;
  double hi = 50.0;
  Index count = 200001;
  int refine_iters = 60;
};

struct GridMin {
  double argmin = 0.0;
  double min = 0.0;
};

/// Dense scan of [lo, hi] followed by golden-section refinement inside the
/// two cells around the best grid point.
template <class F>
GridMin grid_min_1d(F&& objective, const GridSpec& grid) {
  if (!(grid.lo < grid.hi) || grid.count < 2) throw std::invalid_argument("grid_min_1d: bad grid");
  const double h = (grid.hi - grid.lo) / static_cast<double>(grid.count - 1);
  GridMin best{grid.lo, objective(grid.lo)};
  for (Index i = 1; i < grid.count; ++i) {
    const double x = i + 1 == grid.count ? grid.hi : grid.lo + h * static_cast<double>(i);
    const double f = objective(x);
    if (f < best.min) best = {x, f};
  }
  double a = std::max(grid.lo, best.argmin - h);
  double b = std::min(grid.hi, best.argmin + h);
  constexpr double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < grid.refine_iters; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  for (double x : {c, d, 0.5 * (a + b)}) {
    const double f = objective(x);
    if (f < best.min) best = {x, f};
  }
  return best;
}

/// Reference epigraph projection: minimizes (|x|^p - tbar)^2 + (x - xbar)^2
/// over the half-line of sign(xbar) by grid search and compares the result
/// with the boundary point (0, max(tbar, 0)).
inline EpigraphPoint oracle_project_epigraph(double xbar, double tbar, RationalExponent p,
                                             Index count = 200001, int refine_iters = 60) {
  const double pv = p.value();
  const double ax = std::abs(xbar);
  if (tbar >= std::pow(ax, pv)) return {xbar, tbar};
  if (ax == 0.0) return {0.0, std::max(tbar, 0.0)};
  // The minimizer cannot lie beyond |xbar|: both terms grow there.
  const auto g = [&](double x) {
    const double dt = std::pow(x, pv) - tbar;
    const double dx = x - ax;
    return dt * dt + dx * dx;
  };
  const GridMin gm = grid_min_1d(g, GridSpec{0.0, ax, count, refine_iters});
  EpigraphPoint best{gm.argmin, std::pow(gm.argmin, pv)};
  const EpigraphPoint boundary{0.0, std::max(tbar, 0.0)};
  if (projection_objective(boundary, ax, tbar) < gm.min) best = boundary;
  if (xbar < 0.0) best.x = -best.x;
  return best;
}

/// Reference scalar prox by grid search over [0, |tbar|].
inline double oracle_prox_scalar(double tbar, RationalExponent p, double w, Index count = 200001,
                                 int refine_iters = 60) {
  if (tbar == 0.0) return 0.0;
  const double T = std::abs(tbar);
  const auto f = [&](double t) { return prox_objective(t, T, p, w); };
  const GridMin gm = grid_min_1d(f, GridSpec{0.0, T, count, refine_iters});
  const double t = f(0.0) <= gm.min ? 0.0 : gm.argmin;
  return tbar < 0.0 ? -t : t;
}

/// Optimality certificate for a claimed projection y of z onto
/// {y : ||U y - v|| <= delta}. Returns the largest of the feasibility
/// violation, the stationarity residual ||y - z + nu U^T (U y - v)|| with the
/// multiplier nu >= 0 recovered by least squares, and (when nu > 0) the
/// complementarity gap | ||U y - v|| - delta |.
inline double kkt_residual_ball(const Eigen::VectorXd& y, const Eigen::VectorXd& z, const LinearOperator& U,
                                const Eigen::VectorXd& v, double delta) {
  const Eigen::VectorXd r = U.apply(y) - v;
  const double rn = r.norm();
  const double infeas = std::max(rn - delta, 0.0);
  const Eigen::VectorXd g = U.adjoint(r);
  const Eigen::VectorXd d = y - z;
  const double gg = g.squaredNorm();
  double nu = gg > 0.0 ? -d.dot(g) / gg : 0.0;
  nu = std::max(nu, 0.0);
  const double stationarity = (d + nu * g).norm();
  // A multiplier of size ~ roundoff/||g|| carries no complementarity claim.
  const double compl_gap = nu * std::sqrt(gg) > 1e-12 ? std::abs(rn - delta) : 0.0;
  return std::max({infeas, stationarity, compl_gap});
}

/// Largest relative deviation ||grad(x) - fd|| / ||fd|| of an analytic
/// gradient from central differences with step h.
template <class F, class G>
double fd_gradient_check(F&& f, G&& grad, const Eigen::VectorXd& x, double h = 1e-5) {
  if (h < 1e-7 || h > 1e-4) throw std::invalid_argument("fd_gradient_check: h must lie in [1e-7, 1e-4]");
  Eigen::VectorXd fd(x.size());
  Eigen::VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = f(xp);
    xp(i) = x(i) - step;
    const double fm = f(xp);
    xp(i) = x(i);
    fd(i) = (fp - fm) / (2.0 * step);
  }
  const Eigen::VectorXd g = grad(x);
  const double denom = fd.norm();
  return denom > 0.0 ? (g - fd).norm() / denom : (g - fd).norm();
}

/// Hinge value (1/m) sum_j (1 - a_j^T y)^+ where row j of `margins` is a_j = v_j u_j.
inline double hinge_value(const Eigen::MatrixXd& margins, const Eigen::VectorXd& y) {
  const Eigen::VectorXd slack = (1.0 - (margins * y).array()).max(0.0).matrix();
  return slack.sum() / static_cast<double>(margins.rows());
}

/// Exact projection onto {y : (1/m) sum_j (1 - a_j^T y)^+ <= eps} by
/// enumerating every activity pattern. Each sample is either strictly
/// violated (multiplier at its upper bound nu), strictly satisfied
/// (multiplier 0) or sits on the kink a_j^T y = 1 (multiplier in [0, nu]).
/// For a fixed pattern the KKT system is linear in (alpha_kink, nu); the
/// solution that passes every sign check is the projection. Cost is 3^m, so
/// this is only meant for m up to about a dozen.
inline Eigen::VectorXd oracle_project_hinge(const Eigen::VectorXd& z, const Eigen::MatrixXd& margins, double eps,
                                            double check_tol = 1e-9) {
  const Index m = margins.rows();
  const Index n = margins.cols();
  const double budget = eps * static_cast<double>(m);
  if (hinge_value(margins, z) <= eps) return z;
  if (m > 16) throw std::invalid_argument("oracle_project_hinge: too many samples for enumeration");

  const Eigen::VectorXd az = margins * z;
  const Eigen::MatrixXd gram = margins * margins.transpose();
  std::vector<int> state(static_cast<std::size_t>(m), 0);  // 0 = satisfied, 1 = violated, 2 = kink
  Eigen::VectorXd best = z;
  double best_dist = std::numeric_limits<double>::infinity();

  std::vector<Index> kink;
  std::vector<Index> viol;
  const auto evaluate = [&]() {
    kink.clear();
    viol.clear();
    for (Index j = 0; j < m; ++j) {
      if (state[static_cast<std::size_t>(j)] == 1) viol.push_back(j);
      if (state[static_cast<std::size_t>(j)] == 2) kink.push_back(j);
    }
    if (viol.empty()) return;  // the constraint sum would vanish, but budget > 0 is active
    if (static_cast<Index>(kink.size()) > n) return;
    const Index k = static_cast<Index>(kink.size());
    // Unknowns: alpha_kink (k), nu. y = z + nu s_V + sum_kink alpha_j a_j.
    Eigen::VectorXd sV = Eigen::VectorXd::Zero(n);
    for (Index j : viol) sV += margins.row(j).transpose();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    for (Index a = 0; a < k; ++a) {
      const Index ja = kink[static_cast<std::size_t>(a)];
      for (Index b = 0; b < k; ++b) K(a, b) = gram(ja, kink[static_cast<std::size_t>(b)]);
      K(a, k) = margins.row(ja).dot(sV);
      rhs(a) = 1.0 - az(ja);
    }
    // sum_V (1 - a_j^T y) = budget
    double sum_az = 0.0;
    for (Index j : viol) sum_az += az(j);
    for (Index b = 0; b < k; ++b) K(k, b) = margins.row(kink[static_cast<std::size_t>(b)]).dot(sV);
    K(k, k) = sV.squaredNorm();
    rhs(k) = static_cast<double>(viol.size()) - sum_az - budget;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return;
    const double nu = sol(k);
    if (!(nu > 0.0)) return;
    Eigen::VectorXd y = z + nu * sV;
    for (Index a = 0; a < k; ++a) {
      const double al = sol(a);
      if (al < -check_tol * (1.0 + nu) || al > nu + check_tol * (1.0 + nu)) return;
      y += al * margins.row(kink[static_cast<std::size_t>(a)]).transpose();
    }
    const Eigen::VectorXd ay = margins * y;
    for (Index j = 0; j < m; ++j) {
      const int st = state[static_cast<std::size_t>(j)];
      if (st == 1 && ay(j) > 1.0 + check_tol) return;
      if (st == 0 && ay(j) < 1.0 - check_tol) return;
    }
    if (hinge_value(margins, y) > eps + check_tol) return;
    const double dist = (y - z).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  };

  // Odometer over {0,1,2}^m.
  for (;;) {
    evaluate();
    Index j = 0;
    while (j < m && state[static_cast<std::size_t>(j)] == 2) {
      state[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == m) break;
    ++state[static_cast<std::size_t>(j)];
  }
  if (!std::isfinite(best_dist)) throw std::runtime_error("oracle_project_hinge: no KKT pattern found");
  return best;
}

}  // namespace lpqn
