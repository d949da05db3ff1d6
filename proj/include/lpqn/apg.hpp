#pragma once

// Non-monotone accelerated proximal gradient for
//   F(x) = ||x||_p^p + (mu/2) (||A x - b||^2 - eps)
// with the exact elementwise prox, and a monotone FISTA for the l1 version.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpqn/errors.hpp"
#include "lpqn/linops.hpp"
#include "lpqn/scalar_core.hpp"

namespace lpqn {

struct ApgConfig {
  double mu = 1.0;
  int memory = 5;
  int max_iters = 5000;
  double rel_tol = 1e-5;
  RationalExponent p{1, 2};

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("ApgConfig: mu must be positive");
    if (memory < 1) throw std::invalid_argument("ApgConfig: memory must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("ApgConfig: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("ApgConfig: rel_tol must be positive");
  }
};

/// f(x) = ||A x - b||^2 - eps with Lipschitz constant L of its gradient.
struct SmoothObjective {
  LinearOperator A;
  Eigen::VectorXd b;
  double eps = 0.0;
  double L = 0.0;

  /// L defaults to 2 ||A||^2 (power iteration).
  static SmoothObjective make(LinearOperator A, Eigen::VectorXd b, double eps = 0.0,
                              std::optional<double> L_override = std::nullopt) {
    if (b.size() != A.rows()) throw std::invalid_argument("SmoothObjective: b does not match A");
    double L = 0.0;
    if (L_override) {
      L = *L_override;
    } else {
      const double s = spectral_norm(A);
      L = 2.0 * s * s;
    }
    if (!(L > 0.0)) throw std::invalid_argument("SmoothObjective: L must be positive");
    return SmoothObjective{std::move(A), std::move(b), eps, L};
  }

  double value(const Eigen::VectorXd& x) const { return (A.apply(x) - b).squaredNorm() - eps; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return 2.0 * A.adjoint(A.apply(x) - b); }
};

inline double lp_penalty(const Eigen::VectorXd& x, double p) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += x(i) == 0.0 ? 0.0 : std::pow(std::abs(x(i)), p);
  return acc;
}

/// F(x) = sum |x_i|^p + (mu/2) f(x)
inline double objective_F(const Eigen::VectorXd& x, const ApgConfig& cfg, const SmoothObjective& obj) {
  return lp_penalty(x, cfg.p.value()) + 0.5 * cfg.mu * obj.value(x);
}

inline double objective_F_l1(const Eigen::VectorXd& x, double mu, const SmoothObjective& obj) {
  return x.lpNorm<1>() + 0.5 * mu * obj.value(x);
}

/// ||x_new - x_old|| / ||x_old||; 0/0 counts as converged.
inline double relative_change(const Eigen::VectorXd& x_new, const Eigen::VectorXd& x_old) {
  const double num = (x_new - x_old).norm();
  const double den = x_old.norm();
  if (num == 0.0) return 0.0;
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

struct ExtrapolationRecord {
  int k = 0;
  double F_y = 0.0;
  double Delta = 0.0;
  bool accepted = false;
};

struct ApgReport {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;           // stopped by the relative-change rule
  double last_rel_change = 0.0;
  std::vector<double> F_trace;      // F(x^1), F(x^2), ...
  std::vector<ExtrapolationRecord> steps;
  double wall_ms = 0.0;
};

inline void check_finite_value(double v, const char* what, int k) {
  if (!std::isfinite(v)) throw SolverError(std::string("non-finite ") + what + " at iteration " + std::to_string(k));
}

/// Iterates from (x0, x1). Delta^k is the largest F(x^t) over
/// t = max(1, k - l), ..., k.
inline ApgReport apg_solve(const SmoothObjective& obj, const ApgConfig& cfg, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& x1) {
  cfg.validate();
  const Index n = obj.A.cols();
  if (x0.size() != n || x1.size() != n) throw std::invalid_argument("apg_solve: initial points have wrong size");
  const auto start = std::chrono::steady_clock::now();
  const double w = cfg.mu * obj.L / 2.0;
  const ProxWeight weight(w);

  ApgReport rep;
  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd x = x1;
  std::deque<double> history;
  double Fx = objective_F(x, cfg, obj);
  check_finite_value(Fx, "objective", 1);
  rep.F_trace.push_back(Fx);
  history.push_back(Fx);

  Eigen::VectorXd xbar(n), x_new(n);
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const double beta = static_cast<double>(k - 1) / static_cast<double>(k + 2);
    const Eigen::VectorXd y = x + beta * (x - x_prev);
    const double Delta = *std::max_element(history.begin(), history.end());
    const double Fy = objective_F(y, cfg, obj);
    check_finite_value(Fy, "extrapolated objective", k);
    const bool accept = Fy <= Delta;
    rep.steps.push_back({k, Fy, Delta, accept});
    const Eigen::VectorXd& v = accept ? y : x;
    xbar = v - obj.gradient(v) / obj.L;
    for (Index i = 0; i < n; ++i) x_new(i) = prox_scalar(xbar(i), cfg.p, weight);

    const double rel = relative_change(x_new, x);
    x_prev = std::move(x);
    x = x_new;
    Fx = objective_F(x, cfg, obj);
    check_finite_value(Fx, "objective", k + 1);
    rep.F_trace.push_back(Fx);
    history.push_back(Fx);
    while (static_cast<int>(history.size()) > cfg.memory + 1) history.pop_front();
    rep.iterations = k;
    rep.last_rel_change = rel;
    if (rel <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.x = std::move(x);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct FistaReport {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> F_trace;
  double wall_ms = 0.0;
};

/// Monotone FISTA for ||x||_1 + (mu/2) f(x), started at x0 (zero by default).
/// The relative-change rule is tested only on steps that move x.
inline FistaReport fista_l1_solve(const SmoothObjective& obj, double mu, int max_iters, double rel_tol,
                                  std::optional<Eigen::VectorXd> x0 = std::nullopt) {
  if (!(mu > 0.0)) throw std::invalid_argument("fista_l1_solve: mu must be positive");
  if (max_iters < 1 || !(rel_tol > 0.0)) throw std::invalid_argument("fista_l1_solve: bad stopping parameters");
  const Index n = obj.A.cols();
  const auto start = std::chrono::steady_clock::now();
  const double w = mu * obj.L / 2.0;
  FistaReport rep;
  Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = x;
  Eigen::VectorXd zk(n);
  double tk = 1.0;
  double Fx = objective_F_l1(x, mu, obj);
  rep.F_trace.push_back(Fx);
  for (int k = 1; k <= max_iters; ++k) {
    const Eigen::VectorXd g = y - obj.gradient(y) / obj.L;
    for (Index i = 0; i < n; ++i) zk(i) = soft_threshold(g(i), w);
    const double Fz = objective_F_l1(zk, mu, obj);
    check_finite_value(Fz, "objective", k);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    const bool moved = Fz <= Fx;
    const Eigen::VectorXd x_old = x;
    if (moved) {
      x = zk;
      Fx = Fz;
    }
    y = x + (tk / t_next) * (zk - x) + ((tk - 1.0) / t_next) * (x - x_old);
    tk = t_next;
    rep.F_trace.push_back(Fx);
    rep.iterations = k;
    if (moved && relative_change(x, x_old) <= rel_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.x = std::move(x);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace lpqn
