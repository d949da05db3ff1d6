#pragma once

// Exact scalar building blocks: the Euclidean projection onto the epigraph of
// |x|^p, the proximal map of |t|^p, their p = 1 counterparts, and the
// polynomial real-root finder both rely on.
//
// Both non-convex maps reduce, for rational p = s/q, to the nonnegative real
// roots of a polynomial of degree 2q in a = |x|^(1/q). Every nonnegative root
// yields a stationary candidate; the answer is the candidate (including the
// x = 0 boundary) with the smallest objective.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace lpqn {

using Eigen::Index;

/// Exponent p = s/q in (0,1), kept in lowest terms.
class RationalExponent {
 public:
  static constexpr int max_denominator = 16;

  constexpr RationalExponent(int s, int q) : s_(s), q_(q) {
    if (s <= 0 || q <= 0 || s >= q) {
      throw std::invalid_argument("RationalExponent: need 0 < s < q");
    }
    const int g = std::gcd(s, q);
    s_ /= g;
    q_ /= g;
    if (q_ > max_denominator) {
      throw std::invalid_argument("RationalExponent: reduced denominator exceeds 16");
    }
  }

  constexpr int s() const noexcept { return s_; }
  constexpr int q() const noexcept { return q_; }
  constexpr double value() const noexcept { return static_cast<double>(s_) / q_; }

  friend constexpr bool operator==(const RationalExponent&, const RationalExponent&) = default;

 private:
  int s_;
  int q_;
};

/// A point of R^2 read as (signal coordinate, epigraph coordinate).
struct EpigraphPoint {
  double x = 0.0;
  double t = 0.0;

  friend bool operator==(const EpigraphPoint&, const EpigraphPoint&) = default;
};

/// Coefficient w of the quadratic term in min |t|^p + (w/2)(t - tbar)^2.
class ProxWeight {
 public:
  explicit ProxWeight(double w) : w_(w) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("ProxWeight: need finite w > 0");
  }
  double value() const noexcept { return w_; }

 private:
  double w_;
};

inline bool is_feasible(const EpigraphPoint& pt, RationalExponent p, double slack = 1e-12) {
  return pt.t >= std::pow(std::abs(pt.x), p.value()) - slack;
}

namespace detail {

// Horner evaluation of sum_i c[i] a^i together with the derivative.
inline void horner(std::span<const double> c, double a, double& value, double& deriv) {
  value = 0.0;
  deriv = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    deriv = deriv * a + value;
    value = value * a + c[i];
  }
}

inline double abs_horner(std::span<const double> c, double a) {
  double acc = 0.0;
  const double aa = std::abs(a);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * aa + std::abs(c[i]);
  return acc;
}

// a^k for small nonnegative integer k.
inline double ipow(double a, int k) {
  double r = 1.0;
  double b = a;
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

inline double newton_polish(std::span<const double> c, double r) {
  double f = 0.0, df = 0.0;
  horner(c, r, f, df);
  for (int it = 0; it < 6 && f != 0.0 && df != 0.0; ++it) {
    const double cand = r - f / df;
    double fc = 0.0, dfc = 0.0;
    horner(c, cand, fc, dfc);
    if (!(std::abs(fc) < std::abs(f))) break;
    r = cand;
    f = fc;
    df = dfc;
  }
  return r;
}

// Nonnegative real parts of the (nearly) real eigenvalues of the companion
// matrix (cubics in closed form), Newton-polished. No residual filtering: callers that rank candidates
// by objective value want a superset. Coefficients are in ascending order.
inline std::vector<double> candidate_roots(std::span<const double> coeffs) {
  std::size_t hi = coeffs.size();
  while (hi > 0 && coeffs[hi - 1] == 0.0) --hi;
  if (hi == 0) throw std::domain_error("real_nonneg_roots: polynomial is identically zero");

  std::vector<double> roots;
  std::size_t lo = 0;
  while (coeffs[lo] == 0.0) ++lo;
  if (lo > 0) roots.push_back(0.0);

  const std::span<const double> c = coeffs.subspan(lo, hi - lo);
  const std::size_t degree = c.size() - 1;
  if (degree == 0) return roots;
  if (degree == 1) {
    const double r = -c[0] / c[1];
    if (r >= 0.0) roots.push_back(r);
    return roots;
  }

  if (degree == 3) {
    // Depressed cubic y^3 + P y + Q with a = y - B/3.
    const double B = c[2] / c[3], C = c[1] / c[3], D = c[0] / c[3];
    const double shift = B / 3.0;
    const double P = C - B * shift;
    const double Q = 2.0 * shift * shift * shift - shift * C + D;
    const double disc = 0.25 * Q * Q + P * P * P / 27.0;
    const auto push = [&](double y) {
      double r = newton_polish(c, y - shift);
      if (r < 0.0) {
        if (r < -1e-14) return;
        r = 0.0;
      }
      roots.push_back(r);
    };
    if (disc <= 0.0 && P < 0.0) {
      const double m = 2.0 * std::sqrt(-P / 3.0);
      const double arg = std::clamp(3.0 * Q / (P * m), -1.0, 1.0);
      const double phi = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k) push(m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
    } else {
      const double sq = std::sqrt(std::max(disc, 0.0));
      const double u = std::cbrt(-0.5 * Q + sq);
      const double v = std::cbrt(-0.5 * Q - sq);
      push(u + v);
      // Near-double roots: keep the real part of the complex pair as a candidate.
      const double re = -0.5 * (u + v);
      if (0.8660254037844386 * std::abs(u - v) <= 1e-6 * (1.0 + std::abs(re - shift))) push(re);
    }
    return roots;
  }

  constexpr int kMax = 2 * RationalExponent::max_denominator;
  using Companion = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMax, kMax>;
  const auto d = static_cast<Eigen::Index>(degree);
  if (d > kMax) throw std::invalid_argument("real_nonneg_roots: degree exceeds 32");
  Companion comp = Companion::Zero(d, d);
  const double lead = c[degree];
  for (Eigen::Index i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) comp(i, d - 1) = -c[static_cast<std::size_t>(i)] / lead;

  Eigen::EigenSolver<Companion> es(comp, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw std::runtime_error("real_nonneg_roots: eigenvalue solver failed");
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::complex<double> z = ev(i);
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z))) continue;
    double r = newton_polish(c, z.real());
    if (r < 0.0) {
      if (r < -1e-14) continue;
      r = 0.0;
    }
    roots.push_back(r);
  }
  return roots;
}

inline void sort_unique(std::vector<double>& roots, double rel) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  out.reserve(roots.size());
  for (double r : roots) {
    if (!out.empty() && r - out.back() <= rel * (1.0 + std::abs(r))) continue;
    out.push_back(r);
  }
  roots.swap(out);
}

}  // namespace detail

/// Nonnegative real roots of sum_i coeffs[i] a^i (ascending order), found as
/// companion-matrix eigenvalues (closed form for cubics) with a Newton polish. A root r is kept
/// when |P(r)| <= tol * (1 + sum_i |c_i| r^i); roots closer than sqrt(tol)
/// (relative) are merged. Throws std::domain_error for the zero polynomial.
inline std::vector<double> real_nonneg_roots(std::span<const double> coeffs, double tol = 1e-12) {
  std::vector<double> roots = detail::candidate_roots(coeffs);
  std::erase_if(roots, [&](double r) {
    double f = 0.0, df = 0.0;
    detail::horner(coeffs, r, f, df);
    return std::abs(f) > tol * (1.0 + detail::abs_horner(coeffs, r));
  });
  detail::sort_unique(roots, std::sqrt(tol));
  return roots;
}

inline std::vector<double> real_nonneg_roots(std::initializer_list<double> coeffs, double tol = 1e-12) {
  return real_nonneg_roots(std::span<const double>(coeffs.begin(), coeffs.size()), tol);
}

/// Objective of the epigraph projection, (x - xbar)^2 + (t - tbar)^2.
inline double projection_objective(const EpigraphPoint& pt, double xbar, double tbar) {
  const double dx = pt.x - xbar;
  const double dt = pt.t - tbar;
  return dx * dx + dt * dt;
}

/// Euclidean projection of (xbar, tbar) onto {(x,t) : t >= |x|^p}.
///
/// A feasible input is returned as is. Otherwise the candidates are
/// (a^q, a^s) for every nonnegative root a of
///   a^{2q} + (s/q)(a^{2s} - tbar a^s) - |xbar| a^q
/// together with the boundary point (0, max(tbar, 0)); the best one wins, ties
/// going to the smaller |x|, and the sign of xbar is restored.
inline EpigraphPoint project_epigraph(double xbar, double tbar, RationalExponent p) {
  if (!std::isfinite(xbar) || !std::isfinite(tbar)) {
    throw std::domain_error("project_epigraph: non-finite input");
  }
  const double ax = std::abs(xbar);
  if (tbar >= std::pow(ax, p.value())) return {xbar, tbar};
  if (ax == 0.0) return {0.0, std::max(tbar, 0.0)};

  const int s = p.s();
  const int q = p.q();
  const double ratio = static_cast<double>(s) / q;

  // The polynomial always carries a factor a^s; divide it out.
  std::array<double, 2 * RationalExponent::max_denominator + 1> buf{};
  const std::size_t degree = static_cast<std::size_t>(2 * q - s);
  buf[degree] += 1.0;
  buf[static_cast<std::size_t>(s)] += ratio;
  buf[0] += -ratio * tbar;
  buf[static_cast<std::size_t>(q - s)] += -ax;
  const auto roots = detail::candidate_roots(std::span<const double>(buf.data(), degree + 1));

  EpigraphPoint best{0.0, std::max(tbar, 0.0)};
  double best_g = projection_objective(best, ax, tbar);
  for (double a : roots) {
    const EpigraphPoint cand{detail::ipow(a, q), detail::ipow(a, s)};
    const double g = projection_objective(cand, ax, tbar);
    if (g < best_g || (g == best_g && cand.x < best.x)) {
      best = cand;
      best_g = g;
    }
  }
  if (xbar < 0.0) best.x = -best.x;
  return best;
}

/// Objective of the scalar prox, |t|^p + (w/2)(t - tbar)^2.
inline double prox_objective(double t, double tbar, RationalExponent p, double w) {
  const double d = t - tbar;
  return std::pow(std::abs(t), p.value()) + 0.5 * w * d * d;
}

/// Global minimizer of |t|^p + (w/2)(t - tbar)^2.
///
/// Candidates are t = a^q for every nonnegative root a of
/// a^{2q} - |tbar| a^q + (s/(q w)) a^s, plus t = 0; the smallest objective
/// wins (ties to t = 0) and the sign of tbar is restored.
inline double prox_scalar(double tbar, RationalExponent p, ProxWeight weight) {
  if (!std::isfinite(tbar)) throw std::domain_error("prox_scalar: non-finite input");
  if (tbar == 0.0) return 0.0;
  const double w = weight.value();
  const double T = std::abs(tbar);
  const double pv = p.value();

  // A positive stationary point needs T = t + (p/w) t^{p-1} for some t > 0;
  // the right side is bounded below by t0 (2-p)/(1-p), t0 = (p(1-p)/w)^{1/(2-p)}.
  // Below that bound the polynomial has no positive root and 0 is the answer.
  const double t0 = std::pow(pv * (1.0 - pv) / w, 1.0 / (2.0 - pv));
  if (T < t0 * (2.0 - pv) / (1.0 - pv) * (1.0 - 1e-9)) return 0.0;

  const int s = p.s();
  const int q = p.q();
  std::array<double, 2 * RationalExponent::max_denominator + 1> buf{};
  const std::size_t degree = static_cast<std::size_t>(2 * q - s);
  buf[degree] += 1.0;
  buf[static_cast<std::size_t>(q - s)] += -T;
  buf[0] += static_cast<double>(s) / (static_cast<double>(q) * w);
  const auto roots = detail::candidate_roots(std::span<const double>(buf.data(), degree + 1));

  double best = 0.0;
  double best_f = prox_objective(0.0, T, p, w);
  for (double a : roots) {
    const double t = detail::ipow(a, q);
    const double f = prox_objective(t, T, p, w);
    if (f < best_f) {
      best = t;
      best_f = f;
    }
  }
  return tbar < 0.0 ? -best : best;
}

inline double prox_scalar(double tbar, RationalExponent p, double w) {
  return prox_scalar(tbar, p, ProxWeight(w));
}

/// Projection onto the convex cone {(x,t) : t >= |x|}.
inline EpigraphPoint project_epigraph_l1(double xbar, double tbar) {
  const double ax = std::abs(xbar);
  if (tbar >= ax) return {xbar, tbar};
  if (tbar <= -ax) return {0.0, 0.0};
  const double m = 0.5 * (ax + tbar);
  return {xbar < 0.0 ? -m : m, m};
}

/// Prox of |t| with weight w: shrink toward zero by 1/w.
inline double soft_threshold(double tbar, double w) {
  const double mag = std::max(std::abs(tbar) - 1.0 / w, 0.0);
  return tbar < 0.0 ? -mag : mag;
}

}  // namespace lpqn
