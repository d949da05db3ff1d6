#pragma once

// Oracle-backed self-checks. Each suite draws seeded random cases, compares a
// solver against an independent reference and reports the worst deviation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpqn/convex_proj.hpp"
#include "lpqn/datagen.hpp"
#include "lpqn/linops.hpp"
#include "lpqn/oracle.hpp"
#include "lpqn/scalar_core.hpp"
#include "lpqn/schatten_admm.hpp"

namespace lpqn::bench {

struct SuiteResult {
  std::string name;
  long long cases = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  double seconds = 0.0;
  std::string detail;  // worst case description
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void note(SuiteResult& r, double value, const std::string& where) {
  ++r.cases;
  if (std::isnan(value)) value = std::numeric_limits<double>::infinity();
  if (r.cases == 1 || value > r.worst) {
    r.worst = value;
    r.detail = where;
  }
}

inline void finish(SuiteResult& r, const Stopwatch& sw) {
  r.pass = r.worst <= r.tolerance;
  r.seconds = sw.seconds();
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

struct EpigraphSuiteResult {
  SuiteResult oracle;        // objective excess over the grid oracle
  SuiteResult optimality;    // boundary / sign / monotonicity conditions on interior solutions
};

/// Epigraph projection against the grid oracle, plus the structural
/// conditions of an optimal projection: same sign as xbar, t >= tbar,
/// |x|^p >= tbar, and t = |x|^p when the input is infeasible.
inline EpigraphSuiteResult epigraph_suite(const std::vector<RationalExponent>& exponents, int cases_per_p,
                                          Index grid_count, std::uint64_t seed, double tol_oracle = 1e-8,
                                          double tol_opt = 1e-10) {
  detail::Stopwatch sw;
  EpigraphSuiteResult out;
  out.oracle.name = "epigraph_vs_grid";
  out.oracle.tolerance = tol_oracle;
  out.optimality.name = "epigraph_optimality";
  out.optimality.tolerance = tol_opt;
  for (const RationalExponent p : exponents) {
    CounterRng rng(seed, "verify.epigraph." + std::to_string(p.s()) + "/" + std::to_string(p.q()));
    for (int i = 0; i < cases_per_p; ++i) {
      const double xb = rng.uniform(-10.0, 10.0);
      const double tb = rng.uniform(-10.0, 10.0);
      const std::string where = "p=" + std::to_string(p.s()) + "/" + std::to_string(p.q()) + " xbar=" +
                                detail::fmt(xb) + " tbar=" + detail::fmt(tb);
      const EpigraphPoint pt = project_epigraph(xb, tb, p);
      const EpigraphPoint ref = oracle_project_epigraph(xb, tb, p, grid_count);
      const double excess = projection_objective(pt, xb, tb) - projection_objective(ref, xb, tb);
      detail::note(out.oracle, std::max(excess, 0.0), where);
      double viol = std::max(0.0, std::pow(std::abs(pt.x), p.value()) - pt.t);
      const bool infeasible = tb < std::pow(std::abs(xb), p.value());
      if (infeasible && pt.x != 0.0) {
        if (std::signbit(pt.x) != std::signbit(xb)) viol = std::max(viol, 1.0);
        viol = std::max(viol, tb - pt.t);
        viol = std::max(viol, tb - std::pow(std::abs(pt.x), p.value()));
        viol = std::max(viol, std::abs(pt.t - std::pow(std::abs(pt.x), p.value())));
        viol = std::max(viol, std::abs(pt.x) - std::abs(xb));
      }
      detail::note(out.optimality, viol, where);
    }
  }
  detail::finish(out.oracle, sw);
  detail::finish(out.optimality, sw);
  return out;
}

/// prox_scalar against the grid oracle over [0, |tbar|]. `fault_scale`
/// perturbs the weight handed to the solver (not to the oracle).
inline SuiteResult prox_suite(RationalExponent p, int cases, Index grid_count, std::uint64_t seed,
                              double fault_scale = 1.0, double tol = 1e-6) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "prox_vs_grid";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.prox");
  for (int i = 0; i < cases; ++i) {
    const double tb = rng.uniform(-10.0, 10.0);
    const double w = rng.uniform(0.1, 10.0);
    const double got = prox_scalar(tb, p, w * fault_scale);
    const double ref = oracle_prox_scalar(tb, p, w, grid_count);
    detail::note(r, std::abs(got - ref), "tbar=" + detail::fmt(tb) + " w=" + detail::fmt(w));
  }
  detail::finish(r, sw);
  return r;
}

/// prox(2, 1/2, w = 1) against the stated closed value.
inline SuiteResult prox_analytic_case(double expected, double tol = 1e-8) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "prox_analytic_case";
  r.tolerance = tol;
  const double got = prox_scalar(2.0, RationalExponent(1, 2), 1.0);
  detail::note(r, std::abs(got - expected), "got " + detail::fmt(got) + " expected " + detail::fmt(expected));
  detail::finish(r, sw);
  return r;
}

inline SuiteResult residual_ball_suite(int cases, std::uint64_t seed, double tol = 1e-8) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "residual_ball_kkt";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.ball");
  for (int i = 0; i < cases; ++i) {
    const Index m = 2 + static_cast<Index>(rng.below(8));
    const Index n = 2 + static_cast<Index>(rng.below(12));
    const Eigen::MatrixXd U = rng.normal_matrix(m, n);
    const Eigen::VectorXd v = rng.normal_vector(m);
    const Eigen::VectorXd z = 3.0 * rng.normal_vector(n);
    const ResidualBallProjector probe(U, v, 1e300);
    const double delta = probe.residual_floor() + rng.uniform(0.01, 1.0) * v.norm();
    const ResidualBallProjector P(U, v, delta);
    const double k = kkt_residual_ball(P(z), z, dense_op(U), v, delta);
    detail::note(r, k, "case " + std::to_string(i) + " (" + std::to_string(m) + "x" + std::to_string(n) + ")");
  }
  detail::finish(r, sw);
  return r;
}

inline SuiteResult hankel_residual_suite(int cases, std::uint64_t seed, double tol = 1e-8) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "hankel_residual_kkt";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.hankel");
  for (int i = 0; i < cases; ++i) {
    const Index n = 3 + static_cast<Index>(rng.below(10));
    const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n + 4)));
    const HankelShape shape = HankelShape::near_square(n);
    const Eigen::MatrixXd T = rng.normal_matrix(m, n);
    const Eigen::VectorXd yhat = rng.normal_vector(m);
    const Eigen::MatrixXd Z = 2.0 * rng.normal_matrix(shape.rows, shape.cols);
    const Eigen::VectorXd sw_ = antidiag_weights(shape).cwiseSqrt();
    const Eigen::MatrixXd Ut = T * sw_.cwiseInverse().asDiagonal();
    const double floor = ResidualBallProjector(Ut, yhat, 1e300).residual_floor();
    const double eps = std::pow(floor + rng.uniform(0.01, 1.0) * yhat.norm(), 2);
    const HankelResidualProjector P(T, yhat, eps, shape);
    const HankelProjection out = P(Z);
    const Eigen::VectorXd zt = hankel_adjoint(Z, shape).cwiseQuotient(sw_);
    double k = kkt_residual_ball(sw_.cwiseProduct(out.x), zt, dense_op(Ut), yhat, std::sqrt(eps));
    k = std::max(k, (out.X - hankel_lift(out.x, shape)).norm());
    detail::note(r, k, "case " + std::to_string(i) + " (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
  }
  detail::finish(r, sw);
  return r;
}

inline SuiteResult hinge_suite(int cases, Index max_m, Index max_n, std::uint64_t seed, double tol = 1e-6) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "hinge_vs_enumeration";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.hinge");
  for (int i = 0; i < cases; ++i) {
    const Index m = 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_m - 1)));
    const Index n = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_n)));
    const Eigen::MatrixXd Uf = rng.normal_matrix(m, n);
    const Eigen::VectorXd y0 = rng.normal_vector(n);
    Eigen::MatrixXd A(m, n);
    for (Index j = 0; j < m; ++j) A.row(j) = (Uf.row(j).dot(y0) >= 0.0 ? 1.0 : -1.0) * Uf.row(j);
    const Eigen::VectorXd z = rng.normal_vector(n);
    const double eps = rng.uniform(0.02, 0.4);
    const Eigen::VectorXd y = project_hinge_sublevel(z, A, eps);
    const Eigen::VectorXd ref = oracle_project_hinge(z, A, eps);
    detail::note(r, (y - ref).norm(), "case " + std::to_string(i) + " (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  detail::finish(r, sw);
  return r;
}

/// <A x, y> = <x, A^T y> for every operator family, relative to |<A x, y>| + 1.
inline SuiteResult adjoint_suite(int pairs, std::uint64_t seed, double tol = 1e-10) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "adjoint_consistency";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.adjoint");
  const auto check = [&](const LinearOperator& op, const std::string& name) {
    for (int k = 0; k < pairs; ++k) {
      const Eigen::VectorXd x = rng.normal_vector(op.cols());
      const Eigen::VectorXd y = rng.normal_vector(op.rows());
      const double lhs = op.apply(x).dot(y);
      const double rhs = x.dot(op.adjoint(y));
      detail::note(r, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)), name);
    }
  };
  check(dense_op(rng.normal_matrix(7, 11)), "dense");
  check(sampling_op(rng.sample_without_replacement(40, 13), 40), "sampling");
  check(partial_dct_op(rng.sample_without_replacement(64, 20), 64), "partial_dct");
  check(toeplitz_conv_op(rng.normal_vector(30), 20, 40), "toeplitz");
  const HankelShape shape = HankelShape::near_square(15);
  const LinearOperator hank(
      shape.rows * shape.cols, shape.length(),
      [shape](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::MatrixXd X = hankel_lift(x, shape);
        return Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
      },
      [shape](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return hankel_adjoint(Eigen::Map<const Eigen::MatrixXd>(z.data(), shape.rows, shape.cols), shape);
      });
  check(hank, "hankel");
  detail::finish(r, sw);
  return r;
}

inline SuiteResult gradient_suite(int cases, std::uint64_t seed, double tol = 1e-5) {
  detail::Stopwatch sw;
  SuiteResult r;
  r.name = "least_squares_gradient_fd";
  r.tolerance = tol;
  CounterRng rng(seed, "verify.gradient");
  for (int i = 0; i < cases; ++i) {
    const Eigen::MatrixXd A = rng.normal_matrix(8, 12);
    const Eigen::VectorXd b = rng.normal_vector(8);
    const Eigen::VectorXd x = rng.normal_vector(12);
    const auto f = [&](const Eigen::VectorXd& z) { return (A * z - b).squaredNorm(); };
    const auto g = [&](const Eigen::VectorXd& z) { return Eigen::VectorXd(2.0 * A.transpose() * (A * z - b)); };
    detail::note(r, fd_gradient_check(f, g, x), "case " + std::to_string(i));
  }
  detail::finish(r, sw);
  return r;
}

struct SvdSuiteResult {
  SuiteResult identity;  // |Frobenius objective - reduced objective|
  SuiteResult probe;     // largest improvement found by random feasible perturbations
};

/// matrix_xt_update: the Frobenius objective equals the per-singular-value
/// objective, and random feasible perturbations (X', t') never beat it.
inline SvdSuiteResult svd_reduction_suite(int matrices, int probes_per_matrix, Index max_dim, std::uint64_t seed,
                                          RationalExponent p, double tol_identity = 1e-10, double tol_probe = 1e-8) {
  detail::Stopwatch sw;
  SvdSuiteResult out;
  out.identity.name = "svd_reduction_identity";
  out.identity.tolerance = tol_identity;
  out.probe.name = "svd_random_probe";
  out.probe.tolerance = tol_probe;
  CounterRng rng(seed, "verify.svd");
  const double pv = p.value();
  for (int i = 0; i < matrices; ++i) {
    const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_dim)));
    const Index n = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::max<Index>(max_dim - 5, 1))));
    const Index L = std::min(m, n);
    const Eigen::MatrixXd Xb = rng.normal_matrix(m, n);
    Eigen::VectorXd tb(L);
    for (Index k = 0; k < L; ++k) tb(k) = rng.uniform(-1.0, 2.0);
    const MatrixXtUpdate up = matrix_xt_update(Xb, tb, p);
    const double frob = (up.X - Xb).squaredNorm() + (up.t - tb).squaredNorm();
    double reduced = (up.t - tb).squaredNorm();
    for (Index k = 0; k < L; ++k) reduced += std::pow(up.sigma(k) - up.input_sigma(k), 2);
    reduced += std::max(0.0, Xb.squaredNorm() - up.input_sigma.squaredNorm());
    const std::string where = "matrix " + std::to_string(i) + " (" + std::to_string(m) + "x" + std::to_string(n) + ")";
    detail::note(out.identity, std::abs(frob - reduced) / (1.0 + frob), where);
    double best_gain = 0.0;
    for (int k = 0; k < probes_per_matrix; ++k) {
      const double scale = std::pow(10.0, rng.uniform(-4.0, 0.0));
      const Eigen::MatrixXd Xp = up.X + scale * rng.normal_matrix(m, n);
      const Eigen::VectorXd sp = Eigen::BDCSVD<Eigen::MatrixXd>(Xp).singularValues();
      Eigen::VectorXd tp = up.t + scale * rng.normal_vector(L);
      for (Index j = 0; j < L; ++j) tp(j) = std::max(tp(j), std::pow(sp(j), pv));  // lift to feasibility
      const double val = (Xp - Xb).squaredNorm() + (tp - tb).squaredNorm();
      best_gain = std::max(best_gain, frob - val);
    }
    detail::note(out.probe, best_gain, where);
  }
  detail::finish(out.identity, sw);
  detail::finish(out.probe, sw);
  return out;
}

}  // namespace lpqn::bench
