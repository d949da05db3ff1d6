#pragma once

// Two-block ADMM for  min sum_i t_i  s.t. (x_i, t_i) in epi|.|^p, y in V,
// x = y, t = z. The convex set V enters only through a projection callable.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lpqn/errors.hpp"
#include "lpqn/scalar_core.hpp"

namespace lpqn {

enum class Penalty { lp, l1 };

struct AdmmConfig {
  double rho = 1.0;
  int max_iters = 1000;
  double zero_threshold = 1e-6;
  RationalExponent p{1, 2};
  Penalty penalty = Penalty::lp;
  double stop_tol = 0.0;  // 0 runs the full budget

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("AdmmConfig: rho must be positive");
    if (max_iters < 1) throw std::invalid_argument("AdmmConfig: max_iters must be positive");
    if (!(zero_threshold > 0.0)) throw std::invalid_argument("AdmmConfig: zero_threshold must be positive");
    if (!(stop_tol >= 0.0)) throw std::invalid_argument("AdmmConfig: stop_tol must be nonnegative");
  }
};

struct AdmmState {
  Eigen::VectorXd x, t, y, z, lambda, theta;

  static AdmmState zeros(Index n) {
    const Eigen::VectorXd o = Eigen::VectorXd::Zero(n);
    return AdmmState{o, o, o, o, o, o};
  }
};

struct SolveReport {
  Eigen::VectorXd x;             // reported iterate (smallest ||x - y|| seen)
  Eigen::VectorXd y;             // its convex-side partner
  int iterations = 0;
  int best_iteration = 0;
  bool converged = false;
  std::vector<double> primal_x;  // ||x^k - y^k|| per iteration
  std::vector<double> primal_t;  // ||t^k - z^k|| per iteration
  Index sparsity = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  AdmmState final_state;
};

inline Index sparsity_count(const Eigen::VectorXd& x, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("sparsity_count: threshold must be positive");
  Index c = 0;
  for (Index i = 0; i < x.size(); ++i) c += std::abs(x(i)) > threshold ? 1 : 0;
  return c;
}

/// Called after every iteration with (k, state); k counts from 1.
using AdmmObserver = std::function<void(int, const AdmmState&)>;

namespace detail {

inline void epigraph_step(const AdmmConfig& cfg, const Eigen::VectorXd& xbar, const Eigen::VectorXd& tbar,
                          Eigen::VectorXd& x, Eigen::VectorXd& t) {
  for (Index i = 0; i < xbar.size(); ++i) {
    const EpigraphPoint pt = cfg.penalty == Penalty::l1 ? project_epigraph_l1(xbar(i), tbar(i))
                                                        : project_epigraph(xbar(i), tbar(i), cfg.p);
    x(i) = pt.x;
    t(i) = pt.t;
  }
}

inline void check_finite(const Eigen::VectorXd& v, const char* name, int k) {
  if (!v.allFinite()) {
    throw SolverError(std::string("ADMM: non-finite ") + name + " at iteration " + std::to_string(k));
  }
}

}  // namespace detail

/// Runs the ADMM on n coordinates; `project` maps R^n onto V.
template <class Projector>
SolveReport svr_solve(const Projector& project, Index n, const AdmmConfig& cfg,
                      std::optional<AdmmState> init = std::nullopt, const AdmmObserver& observer = {}) {
  cfg.validate();
  if (n < 1) throw std::invalid_argument("svr_solve: n must be positive");
  const auto start = std::chrono::steady_clock::now();
  AdmmState s = init ? std::move(*init) : AdmmState::zeros(n);
  if (s.y.size() != n || s.z.size() != n || s.lambda.size() != n || s.theta.size() != n) {
    throw std::invalid_argument("svr_solve: initial state has wrong size");
  }
  s.x.resize(n);
  s.t.resize(n);
  const double rho = cfg.rho;

  SolveReport rep;
  rep.primal_x.reserve(static_cast<std::size_t>(cfg.max_iters));
  rep.primal_t.reserve(static_cast<std::size_t>(cfg.max_iters));
  double best = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= cfg.max_iters; ++k) {
    detail::epigraph_step(cfg, s.y - s.lambda / rho, s.z - s.theta / rho, s.x, s.t);
    s.y = project(Eigen::VectorXd(s.x + s.lambda / rho));
    s.z = s.t + (s.theta.array() - 1.0).matrix() / rho;
    const Eigen::VectorXd rx = s.x - s.y;
    const Eigen::VectorXd rt = s.t - s.z;
    s.lambda += rho * rx;
    s.theta += rho * rt;
    detail::check_finite(s.y, "y", k);
    detail::check_finite(s.lambda, "lambda", k);

    const double px = rx.norm();
    const double pt = rt.norm();
    rep.primal_x.push_back(px);
    rep.primal_t.push_back(pt);
    rep.iterations = k;
    if (px <= best) {
      best = px;
      rep.x = s.x;
      rep.y = s.y;
      rep.best_iteration = k;
    }
    if (observer) observer(k, s);
    if (cfg.stop_tol > 0.0 && px <= cfg.stop_tol && pt <= cfg.stop_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.sparsity = sparsity_count(rep.x, cfg.zero_threshold);
  rep.final_state = std::move(s);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace lpqn
