#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace lpqn {

using Eigen::Index;

/// Immutable linear map R^cols -> R^rows with its adjoint. Copies share the
/// underlying data, so operators are cheap to pass around and safe to use from
/// several threads at once.
class LinearOperator {
 public:
  using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  LinearOperator(Index rows, Index cols, Map apply, Map adjoint)
      : rows_(rows), cols_(cols), apply_(std::move(apply)), adjoint_(std::move(adjoint)) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("LinearOperator: empty dimensions");
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != cols_) throw std::invalid_argument("LinearOperator::apply: size mismatch");
    return apply_(x);
  }

  Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const {
    if (y.size() != rows_) throw std::invalid_argument("LinearOperator::adjoint: size mismatch");
    return adjoint_(y);
  }

 private:
  Index rows_;
  Index cols_;
  Map apply_;
  Map adjoint_;
};

/// Materializes an operator column by column.
inline Eigen::MatrixXd to_dense(const LinearOperator& op) {
  Eigen::MatrixXd out(op.rows(), op.cols());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e(j) = 1.0;
    out.col(j) = op.apply(e);
    e(j) = 0.0;
  }
  return out;
}

inline LinearOperator dense_op(Eigen::MatrixXd matrix) {
  if (!matrix.allFinite()) throw std::invalid_argument("dense_op: non-finite entries");
  auto m = std::make_shared<const Eigen::MatrixXd>(std::move(matrix));
  return LinearOperator(
      m->rows(), m->cols(), [m](const Eigen::VectorXd& x) -> Eigen::VectorXd { return *m * x; },
      [m](const Eigen::VectorXd& y) -> Eigen::VectorXd { return m->transpose() * y; });
}

/// Picks the entries listed in `indices` (0-based, strictly increasing) out of
/// a length-N vector; the adjoint scatters them back.
inline LinearOperator sampling_op(std::vector<Index> indices, Index N) {
  if (indices.empty()) throw std::invalid_argument("sampling_op: empty index set");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= N) throw std::out_of_range("sampling_op: index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw std::invalid_argument("sampling_op: indices must be distinct and sorted");
    }
  }
  auto idx = std::make_shared<const std::vector<Index>>(std::move(indices));
  const auto rows = static_cast<Index>(idx->size());
  return LinearOperator(
      rows, N,
      [idx](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd out(static_cast<Index>(idx->size()));
        for (std::size_t k = 0; k < idx->size(); ++k) out(static_cast<Index>(k)) = x((*idx)[k]);
        return out;
      },
      [idx, N](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
        for (std::size_t k = 0; k < idx->size(); ++k) out((*idx)[k]) = y(static_cast<Index>(k));
        return out;
      });
}

/// Rows of the orthonormal DCT-II matrix of size n:
/// C(k,i) = a_k cos(pi (2i+1) k / (2n)), a_0 = sqrt(1/n), a_k = sqrt(2/n).
inline Eigen::MatrixXd dct_rows(std::span<const Index> rows, Index n) {
  Eigen::MatrixXd C(static_cast<Index>(rows.size()), n);
  const double a0 = std::sqrt(1.0 / static_cast<double>(n));
  const double ak = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index k = rows[r];
    if (k < 0 || k >= n) throw std::out_of_range("partial_dct_op: row index out of range");
    const double scale = k == 0 ? a0 : ak;
    for (Index i = 0; i < n; ++i) {
      // Reduce the angle argument exactly in integers before calling cos.
      const std::int64_t num = ((2 * static_cast<std::int64_t>(i) + 1) * k) % (4 * n);
      C(static_cast<Index>(r), i) =
          scale * std::cos(std::numbers::pi * static_cast<double>(num) / (2.0 * static_cast<double>(n)));
    }
  }
  return C;
}

/// Selected rows of the orthonormal DCT-II, applied as an explicit dense block.
inline LinearOperator partial_dct_op(const std::vector<Index>& row_indices, Index n) {
  std::vector<Index> sorted = row_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("partial_dct_op: duplicate row index");
  }
  return dense_op(dct_rows(row_indices, n));
}

/// Dense m x n matrix of the windowed convolution h -> (u * h)[0..m).
inline Eigen::MatrixXd toeplitz_matrix(const Eigen::VectorXd& u, Index n, Index m) {
  const Index T = u.size();
  if (T == 0 || n <= 0 || m <= 0) throw std::invalid_argument("toeplitz: empty input");
  if (m > n + T - 1) throw std::invalid_argument("toeplitz: window longer than full convolution");
  Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n && j <= i; ++j) {
      if (i - j < T) Tm(i, j) = u(i - j);
    }
  }
  return Tm;
}

/// h -> first m samples of the full convolution u * h (h has length n).
inline LinearOperator toeplitz_conv_op(const Eigen::VectorXd& u, Index n, Index m) {
  const Index T = u.size();
  if (T == 0 || n <= 0 || m <= 0) throw std::invalid_argument("toeplitz_conv_op: empty input");
  if (m > n + T - 1) throw std::invalid_argument("toeplitz_conv_op: window longer than full convolution");
  auto uu = std::make_shared<const Eigen::VectorXd>(u);
  return LinearOperator(
      m, n,
      [uu, n, m](const Eigen::VectorXd& h) -> Eigen::VectorXd {
        const Index T = uu->size();
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
        for (Index i = 0; i < m; ++i) {
          const Index jlo = std::max<Index>(0, i - T + 1);
          const Index jhi = std::min<Index>(n - 1, i);
          double acc = 0.0;
          for (Index j = jlo; j <= jhi; ++j) acc += h(j) * (*uu)(i - j);
          y(i) = acc;
        }
        return y;
      },
      [uu, n, m](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        const Index T = uu->size();
        Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
        for (Index j = 0; j < n; ++j) {
          const Index ihi = std::min<Index>(m - 1, j + T - 1);
          double acc = 0.0;
          for (Index i = j; i <= ihi; ++i) acc += y(i) * (*uu)(i - j);
          h(j) = acc;
        }
        return h;
      });
}

/// Shape of an r x c Hankel matrix generated by a length-n vector, r + c - 1 = n.
struct HankelShape {
  Index rows = 0;
  Index cols = 0;

  Index length() const noexcept { return rows + cols - 1; }

  /// r = ceil((n+1)/2), c = n + 1 - r.
  static HankelShape near_square(Index n) {
    if (n < 1) throw std::invalid_argument("HankelShape: need n >= 1");
    const Index r = (n + 2) / 2;
    return HankelShape{r, n + 1 - r};
  }

  static HankelShape make(Index r, Index c, Index n) {
    if (r < 1 || c < 1 || r + c - 1 != n) throw std::invalid_argument("HankelShape: need r + c - 1 = n");
    return HankelShape{r, c};
  }
};

inline Eigen::MatrixXd hankel_lift(const Eigen::VectorXd& x, const HankelShape& shape) {
  if (x.size() != shape.length()) throw std::invalid_argument("hankel_lift: shape mismatch");
  Eigen::MatrixXd X(shape.rows, shape.cols);
  for (Index j = 0; j < shape.cols; ++j)
    for (Index i = 0; i < shape.rows; ++i) X(i, j) = x(i + j);
  return X;
}

/// Anti-diagonal sums; the adjoint of hankel_lift under the Frobenius product.
inline Eigen::VectorXd hankel_adjoint(const Eigen::MatrixXd& Z, const HankelShape& shape) {
  if (Z.rows() != shape.rows || Z.cols() != shape.cols) throw std::invalid_argument("hankel_adjoint: shape mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.length());
  for (Index j = 0; j < shape.cols; ++j)
    for (Index i = 0; i < shape.rows; ++i) x(i + j) += Z(i, j);
  return x;
}

/// Number of entries on each anti-diagonal.
inline Eigen::VectorXd antidiag_weights(const HankelShape& shape) {
  Eigen::VectorXd w(shape.length());
  for (Index k = 0; k < shape.length(); ++k) {
    const Index lo = std::max<Index>(0, k - shape.cols + 1);
    const Index hi = std::min<Index>(shape.rows - 1, k);
    w(k) = static_cast<double>(hi - lo + 1);
  }
  return w;
}

/// Largest singular value by power iteration on op^T op, started from a
/// fixed-seed vector. Stops once the estimate changes by at most `tol`
/// (relative) between sweeps.
inline double spectral_norm(const LinearOperator& op, double tol = 1e-12, int maxit = 5000,
                            std::uint64_t seed = 0x5eed) {
  // Deterministic start: a hashed sequence, never orthogonal in practice.
  Eigen::VectorXd v(op.cols());
  std::uint64_t state = seed;
  for (Index i = 0; i < v.size(); ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    v(i) = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < maxit; ++it) {
    Eigen::VectorXd w = op.adjoint(op.apply(v));
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    const double next = std::sqrt(nrm);
    v = w / nrm;
    if (std::abs(next - sigma) <= tol * next) return next;
    sigma = next;
  }
  return sigma;
}

}  // namespace lpqn
