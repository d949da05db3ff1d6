#pragma once

// Euclidean projections onto the convex sets used by the experiments. Each
// projector is built once (factorizations cached) and then called once per
// ADMM iteration; calling it never mutates the object.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "lpqn/errors.hpp"
#include "lpqn/linops.hpp"

namespace lpqn {

enum class ProjectionKind { residual_ball, sampling_ball, hankel_residual, hinge_sublevel, custom };

/// Tag plus tolerance describing which convex set an experiment projects onto.
struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::residual_ball;
  double tol = 1e-8;
};

inline const char* to_string(ProjectionKind k) {
  switch (k) {
    case ProjectionKind::residual_ball: return "residual_ball";
    case ProjectionKind::sampling_ball: return "sampling_ball";
    case ProjectionKind::hankel_residual: return "hankel_residual";
    case ProjectionKind::hinge_sublevel: return "hinge_sublevel";
    case ProjectionKind::custom: return "custom";
  }
  return "unknown";
}

/// Projection onto {y : ||U y - v|| <= delta}.
///
/// With the thin SVD U = W S V^T the projection is
/// y(nu) = (I + nu U^T U)^{-1} (z + nu U^T v), and in the right singular basis
///   V^T y(nu) = (V^T z + nu S W^T v) ./ (1 + nu s^2),
/// so the residual ||U y(nu) - v||^2 = sum_i r_i^2 / (1 + nu s_i^2)^2 + floor^2
/// (r = S V^T z - W^T v, floor = distance from v to range(U)) is a scalar,
/// strictly decreasing function of nu. The root is found by Newton on
/// 1/||.|| - 1/delta', safeguarded by bisection.
class ResidualBallProjector {
 public:
  ResidualBallProjector(const Eigen::MatrixXd& U, Eigen::VectorXd v, double delta, double tol = 1e-12)
      : delta_(delta), tol_(tol), v_(std::move(v)) {
    if (U.rows() != v_.size()) throw std::invalid_argument("ResidualBallProjector: U and v disagree");
    if (!(delta >= 0.0)) throw std::invalid_argument("ResidualBallProjector: delta must be nonnegative");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? s(0) * 1e-12 * static_cast<double>(std::max(U.rows(), U.cols())) : 0.0;
    Index r = 0;
    while (r < s.size() && s(r) > cutoff) ++r;
    s_ = s.head(r);
    V_ = svd.matrixV().leftCols(r);
    const Eigen::MatrixXd W = svd.matrixU().leftCols(r);
    vc_ = W.transpose() * v_;
    floor_ = (v_ - W * vc_).norm();
    // Roundoff leaves a floor of order 1e-15 ||v|| even for consistent systems.
    if (delta_ < floor_ - 1e-11 * (1.0 + v_.norm())) {
      throw InfeasibleSetError("residual ball is empty: smallest attainable residual " + std::to_string(floor_) +
                                   " exceeds radius " + std::to_string(delta_),
                               floor_);
    }
  }

  /// Ball of relative radius eps: ||U y - v|| <= eps ||v||.
  static ResidualBallProjector relative(const Eigen::MatrixXd& U, Eigen::VectorXd v, double eps) {
    const double delta = eps * v.norm();
    return ResidualBallProjector(U, std::move(v), delta);
  }

  double radius() const noexcept { return delta_; }
  double residual_floor() const noexcept { return floor_; }
  Index dim() const noexcept { return V_.rows(); }

  /// Residual norm ||U y - v|| computed through the cached factorization.
  double residual(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd r = s_.cwiseProduct(V_.transpose() * y) - vc_;
    return std::sqrt(r.squaredNorm() + floor_ * floor_);
  }

  /// Projection of z, and the multiplier nu of the ball constraint
  /// (+infinity when the ball degenerates to the affine set U y = Pv).
  std::pair<Eigen::VectorXd, double> project_with_multiplier(const Eigen::VectorXd& z) const {
    if (z.size() != V_.rows()) throw std::invalid_argument("ResidualBallProjector: size mismatch");
    const Eigen::VectorXd zc = V_.transpose() * z;
    const Eigen::VectorXd r = s_.cwiseProduct(zc) - vc_;
    const double floor2 = floor_ * floor_;
    if (std::sqrt(r.squaredNorm() + floor2) <= delta_) return {z, 0.0};

    const double reduced2 = delta_ * delta_ - floor2;
    Eigen::VectorXd yc(zc.size());
    double nu = std::numeric_limits<double>::infinity();
    if (reduced2 <= 0.0 || std::sqrt(std::max(reduced2, 0.0)) <= 1e-14 * (1.0 + delta_)) {
      yc = vc_.cwiseQuotient(s_);
    } else {
      nu = solve_multiplier(r, std::sqrt(reduced2));
      const Eigen::ArrayXd s2 = s_.array().square();
      yc = ((zc + nu * s_.cwiseProduct(vc_)).array() / (1.0 + nu * s2)).matrix();
    }
    return {z + V_ * (yc - zc), nu};
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const { return project_with_multiplier(z).first; }

 private:
  // Root of phi(nu) = ||r ./ (1 + nu s^2)|| - target, nu > 0, phi(0) > 0.
  double solve_multiplier(const Eigen::VectorXd& r, double target) const {
    const Eigen::ArrayXd s2 = s_.array().square();
    const Eigen::ArrayXd r2 = r.array().square();
    const auto norm_at = [&](double nu, double* dnorm) {
      const Eigen::ArrayXd den = 1.0 + nu * s2;
      const double n2 = (r2 / den.square()).sum();
      const double nrm = std::sqrt(n2);
      if (dnorm != nullptr) *dnorm = -(r2 * s2 / den.cube()).sum() / nrm;
      return nrm;
    };
    double lo = 0.0;
    double hi = 1.0 / s2.maxCoeff();
    while (norm_at(hi, nullptr) > target) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw SolverError("ResidualBallProjector: multiplier bracket diverged");
    }
    double nu = lo;
    for (int it = 0; it < 200; ++it) {
      double dn = 0.0;
      const double nrm = norm_at(nu, &dn);
      const double phi = nrm - target;
      if (std::abs(phi) <= tol_ * target) break;
      if (phi > 0.0) lo = nu; else hi = nu;
      // Newton on 1/norm - 1/target, which is close to linear in nu.
      const double g = 1.0 / nrm - 1.0 / target;
      const double dg = -dn / (nrm * nrm);
      double next = dg != 0.0 ? nu - g / dg : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo <= 1e-16 * hi) break;
      nu = next;
    }
    return nu;
  }

  double delta_;
  double tol_;
  Eigen::VectorXd v_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd V_;
  Eigen::VectorXd vc_;
  double floor_ = 0.0;
};

/// One-off projection onto {y : ||U y - v|| <= delta}; materializes U and
/// factors it on every call. Build a ResidualBallProjector to reuse the SVD.
inline Eigen::VectorXd project_residual_ball(const Eigen::VectorXd& z, const LinearOperator& U,
                                             const Eigen::VectorXd& v, double delta) {
  return ResidualBallProjector(to_dense(U), v, delta)(z);
}

/// Projection onto {y : ||y_Omega - b|| <= eps}; entries outside Omega are free.
inline Eigen::VectorXd project_sampling_ball(const Eigen::VectorXd& z, std::span<const Index> omega,
                                             const Eigen::VectorXd& b, double eps) {
  if (static_cast<Index>(omega.size()) != b.size()) throw std::invalid_argument("project_sampling_ball: |Omega| != |b|");
  if (!(eps >= 0.0)) throw std::invalid_argument("project_sampling_ball: eps must be nonnegative");
  double r2 = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double d = z(omega[k]) - b(static_cast<Index>(k));
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  if (r <= eps || r == 0.0) return z;
  const double scale = eps / r;
  Eigen::VectorXd y = z;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double bk = b(static_cast<Index>(k));
    y(omega[k]) = bk + (z(omega[k]) - bk) * scale;
  }
  return y;
}

/// Matrix flavor of the sampling ball: Omega holds column-major linear indices.
class SamplingBallProjector {
 public:
  SamplingBallProjector(Index rows, Index cols, std::vector<Index> omega, Eigen::VectorXd b, double eps)
      : rows_(rows), cols_(cols), omega_(std::move(omega)), b_(std::move(b)), eps_(eps) {
    for (Index k : omega_) {
      if (k < 0 || k >= rows * cols) throw std::out_of_range("SamplingBallProjector: index out of range");
    }
  }

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& Z) const {
    Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(Z.data(), Z.size());
    const Eigen::VectorXd y = project_sampling_ball(z, omega_, b_, eps_);
    return Eigen::Map<const Eigen::MatrixXd>(y.data(), rows_, cols_);
  }

  double residual(const Eigen::MatrixXd& X) const {
    double r2 = 0.0;
    for (std::size_t k = 0; k < omega_.size(); ++k) {
      const double d = X(omega_[k]) - b_(static_cast<Index>(k));
      r2 += d * d;
    }
    return std::sqrt(r2);
  }

  double radius() const noexcept { return eps_; }

 private:
  Index rows_;
  Index cols_;
  std::vector<Index> omega_;
  Eigen::VectorXd b_;
  double eps_;
};

struct HankelProjection {
  Eigen::VectorXd x;
  Eigen::MatrixXd X;
};

/// Projection onto {Hankel(x) : ||T x - yhat||^2 <= eps}.
///
/// ||Hankel(x) - Z||_F^2 = sum_k w_k (x_k - zbar_k)^2 + const with w the
/// anti-diagonal counts and zbar the anti-diagonal means of Z. In the scaled
/// variable xs = sqrt(w) .* x this is a plain residual-ball projection with
/// operator T diag(1/sqrt(w)) and radius sqrt(eps).
class HankelResidualProjector {
 public:
  HankelResidualProjector(const Eigen::MatrixXd& T, const Eigen::VectorXd& yhat, double eps, HankelShape shape)
      : shape_(shape),
        sqrt_w_(antidiag_weights(shape).cwiseSqrt()),
        ball_(T * sqrt_w_.cwiseInverse().asDiagonal(), yhat, std::sqrt(std::max(eps, 0.0))) {
    if (T.cols() != shape.length()) throw std::invalid_argument("HankelResidualProjector: T and shape disagree");
  }

  HankelProjection operator()(const Eigen::MatrixXd& Z) const {
    const Eigen::VectorXd w = sqrt_w_.cwiseAbs2();
    const Eigen::VectorXd zbar = hankel_adjoint(Z, shape_).cwiseQuotient(w);
    const Eigen::VectorXd xs = ball_(sqrt_w_.cwiseProduct(zbar));
    HankelProjection out;
    out.x = xs.cwiseQuotient(sqrt_w_);
    out.X = hankel_lift(out.x, shape_);
    return out;
  }

  const HankelShape& shape() const noexcept { return shape_; }
  const Eigen::VectorXd& sqrt_weights() const noexcept { return sqrt_w_; }
  const ResidualBallProjector& scaled_ball() const noexcept { return ball_; }

 private:
  HankelShape shape_;
  Eigen::VectorXd sqrt_w_;
  ResidualBallProjector ball_;
};

inline HankelProjection project_hankel_residual(const Eigen::MatrixXd& Z, const LinearOperator& T,
                                                const Eigen::VectorXd& yhat, double eps, const HankelShape& shape) {
  return HankelResidualProjector(to_dense(T), yhat, eps, shape)(Z);
}

struct HingeOptions {
  double gap_tol = 1e-8;    // duality gap of each inner solve
  int max_inner = 10000;    // coordinate sweeps per inner solve
  int max_outer = 200;      // multiplier updates
};

/// Projection onto {y : (1/m) sum_j (1 - a_j^T y)^+ <= eps}, a_j = v_j u_j
/// stored as the rows of `margins`.
///
/// For a fixed multiplier nu the penalized problem
///   min 1/2 ||y - z||^2 + nu sum_j (1 - a_j^T y)^+
/// is solved in its box-constrained dual (alpha in [0, nu]^m,
/// y = z + A^T alpha) by coordinate ascent until the duality gap drops below
/// `gap_tol`. The multiplier is then located by a safeguarded secant search on
/// the nonincreasing map nu -> sum_j (1 - a_j^T y(nu))^+. The activity pattern
/// at the final multiplier is used to solve the KKT system exactly; that
/// refinement is kept only if it passes every sign check.
///
/// The last dual solution and multiplier are kept as a warm start for the next
/// call, so an instance must not be shared between threads.
class HingeProjector {
 public:
  HingeProjector(Eigen::MatrixXd margins, double eps, HingeOptions opts = {})
      : A_(std::move(margins)), At_(A_.transpose()), eps_(eps), opts_(opts) {
    if (!(eps > 0.0)) throw std::invalid_argument("HingeProjector: eps must be positive");
    row_norm2_ = A_.rowwise().squaredNorm();
  }

  double hinge(const Eigen::VectorXd& y) const {
    return (1.0 - (A_ * y).array()).max(0.0).sum() / static_cast<double>(A_.rows());
  }

  double epsilon() const noexcept { return eps_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const {
    if (z.size() != A_.cols()) throw std::invalid_argument("HingeProjector: size mismatch");
    const double budget = eps_ * static_cast<double>(A_.rows());
    const auto excess = [&](const Eigen::VectorXd& y) { return (1.0 - (A_ * y).array()).max(0.0).sum() - budget; };
    if (excess(z) <= 0.0) return z;

    Eigen::VectorXd alpha = warm_alpha_.size() == A_.rows() ? warm_alpha_ : Eigen::VectorXd::Zero(A_.rows());
    double last_gap = 0.0;
    const auto solve_at = [&](double nu) {
      Eigen::VectorXd a = alpha.cwiseMin(nu);
      Eigen::VectorXd y = z + A_.transpose() * a;
      last_gap = coordinate_ascent(z, nu, a, y);
      alpha = a;
      return y;
    };

    // Bracket the multiplier.
    double lo = 0.0, g_lo = excess(z);
    double hi = warm_nu_ > 0.0 ? warm_nu_ : 1.0;
    Eigen::VectorXd y_hi = solve_at(hi);
    double g_hi = excess(y_hi);
    int guard = 0;
    while (g_hi > 0.0) {
      lo = hi;
      g_lo = g_hi;
      hi *= 4.0;
      y_hi = solve_at(hi);
      g_hi = excess(y_hi);
      if (++guard > 80) {
        throw InfeasibleSetError("hinge sublevel set appears empty", (g_hi + budget) / static_cast<double>(A_.rows()));
      }
    }
    // Illinois-style regula falsi; keep the feasible endpoint.
    int side = 0;
    for (int it = 0; it < opts_.max_outer; ++it) {
      if (-g_hi <= opts_.gap_tol * (1.0 + budget) || hi - lo <= 1e-15 * hi) break;
      double nu = hi - g_hi * (hi - lo) / (g_hi - g_lo);
      if (!(nu > lo && nu < hi)) nu = 0.5 * (lo + hi);
      const Eigen::VectorXd y = solve_at(nu);
      const double g = excess(y);
      if (g > 0.0) {
        lo = nu;
        g_lo = g;
        if (side == -1) g_hi *= 0.5;
        side = -1;
      } else {
        hi = nu;
        g_hi = g;
        y_hi = y;
        if (side == 1) g_lo *= 0.5;
        side = 1;
      }
    }
    // Recompute at the feasible endpoint so alpha matches y_hi.
    y_hi = solve_at(hi);
    warm_alpha_ = alpha;
    warm_nu_ = hi;
    if (last_gap > opts_.gap_tol * (1.0 + z.squaredNorm())) {
      throw InexactProjectionError("hinge projection: inner solve did not reach gap tolerance", y_hi, last_gap);
    }
    if (auto exact = refine(z, alpha, hi)) return *exact;
    return y_hi;
  }

 private:
  // Dual coordinate ascent for fixed nu; returns the final duality gap.
  double coordinate_ascent(const Eigen::VectorXd& z, double nu, Eigen::VectorXd& alpha, Eigen::VectorXd& y) const {
    const Index m = A_.rows();
    double gap = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < opts_.max_inner; ++sweep) {
      for (Index j = 0; j < m; ++j) {
        if (row_norm2_(j) == 0.0) continue;
        const double grad = 1.0 - At_.col(j).dot(y);
        const double next = std::clamp(alpha(j) + grad / row_norm2_(j), 0.0, nu);
        const double step = next - alpha(j);
        if (step != 0.0) {
          y.noalias() += step * At_.col(j);
          alpha(j) = next;
        }
      }
      if (sweep % 4 == 3 || sweep + 1 == opts_.max_inner) {
        y = z + A_.transpose() * alpha;  // resync against drift
        const Eigen::VectorXd slack = (1.0 - (A_ * y).array()).matrix();
        const double d = (y - z).squaredNorm();
        const double primal = 0.5 * d + nu * slack.array().max(0.0).sum();
        const double dual = alpha.dot(slack) + 0.5 * d;  // sum alpha_j (1 - a_j^T z) - 1/2 ||A^T alpha||^2
        gap = primal - dual;
        if (gap <= opts_.gap_tol * (1.0 + z.squaredNorm())) break;
      }
    }
    return gap;
  }

  // Exact KKT solve on the activity pattern read off alpha.
  std::optional<Eigen::VectorXd> refine(const Eigen::VectorXd& z, const Eigen::VectorXd& alpha, double nu) const {
    const Index m = A_.rows();
    const double budget = eps_ * static_cast<double>(m);
    const double band = 1e-7 * nu;
    std::vector<Index> upper, kink;
    for (Index j = 0; j < m; ++j) {
      if (alpha(j) >= nu - band) upper.push_back(j);
      else if (alpha(j) > band) kink.push_back(j);
    }
    if (upper.empty() || static_cast<Index>(kink.size()) > A_.cols()) return std::nullopt;
    Eigen::VectorXd sU = Eigen::VectorXd::Zero(A_.cols());
    for (Index j : upper) sU += A_.row(j).transpose();
    const Index k = static_cast<Index>(kink.size());
    Eigen::MatrixXd Ak(k, A_.cols());
    for (Index a = 0; a < k; ++a) Ak.row(a) = A_.row(kink[static_cast<std::size_t>(a)]);
    Eigen::MatrixXd K(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    K.topLeftCorner(k, k) = Ak * Ak.transpose();
    K.topRightCorner(k, 1) = Ak * sU;
    K.bottomLeftCorner(1, k) = (Ak * sU).transpose();
    K(k, k) = sU.squaredNorm();
    rhs.head(k) = (1.0 - (Ak * z).array()).matrix();
    double sum_az = 0.0;
    for (Index j : upper) sum_az += A_.row(j).dot(z);
    rhs(k) = static_cast<double>(upper.size()) - sum_az - budget;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).norm() > 1e-10 * (1.0 + rhs.norm())) return std::nullopt;
    const double nu_star = sol(k);
    if (!(nu_star > 0.0)) return std::nullopt;
    const double tol = 1e-9;
    for (Index a = 0; a < k; ++a) {
      if (sol(a) < -tol * (1.0 + nu_star) || sol(a) > nu_star * (1.0 + tol) + tol) return std::nullopt;
    }
    Eigen::VectorXd y = z + nu_star * sU + Ak.transpose() * sol.head(k);
    const Eigen::VectorXd ay = A_ * y;
    std::vector<char> is_upper(static_cast<std::size_t>(m), 0), is_kink(static_cast<std::size_t>(m), 0);
    for (Index j : upper) is_upper[static_cast<std::size_t>(j)] = 1;
    for (Index j : kink) is_kink[static_cast<std::size_t>(j)] = 1;
    for (Index j = 0; j < m; ++j) {
      if (is_upper[static_cast<std::size_t>(j)] && ay(j) > 1.0 + tol) return std::nullopt;
      if (!is_upper[static_cast<std::size_t>(j)] && !is_kink[static_cast<std::size_t>(j)] && ay(j) < 1.0 - tol) {
        return std::nullopt;
      }
    }
    if (hinge(y) > eps_ + tol) return std::nullopt;
    return y;
  }

  Eigen::MatrixXd A_;
  Eigen::MatrixXd At_;  // rows of A_ as contiguous columns
  double eps_;
  HingeOptions opts_;
  Eigen::VectorXd row_norm2_;
  mutable Eigen::VectorXd warm_alpha_;
  mutable double warm_nu_ = 0.0;
};

inline Eigen::VectorXd project_hinge_sublevel(const Eigen::VectorXd& z, const Eigen::MatrixXd& margins, double eps,
                                              double tol = 1e-8) {
  HingeOptions opts;
  opts.gap_tol = tol;
  return HingeProjector(margins, eps, opts)(z);
}

}  // namespace lpqn
