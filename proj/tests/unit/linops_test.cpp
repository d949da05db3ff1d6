#include "lpqn/linops.hpp"

#include <random>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

namespace lpqn {
namespace {

Eigen::VectorXd random_vec(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

void expect_adjoint_consistent(const LinearOperator& op, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd x = random_vec(rng, op.cols());
    const Eigen::VectorXd y = random_vec(rng, op.rows());
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.adjoint(y));
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(DenseOp, IdentityAndRowVector) {
  const auto I = dense_op(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(I.apply(Eigen::Vector3d(1, 0, 0)), Eigen::VectorXd(Eigen::Vector3d(1, 0, 0)));
  Eigen::MatrixXd row(1, 2);
  row << 1, 2;
  const auto R = dense_op(row);
  EXPECT_EQ(R.adjoint(Eigen::VectorXd::Ones(1)), Eigen::VectorXd(Eigen::Vector2d(1, 2)));
}

TEST(DenseOp, AdjointConsistencyAndSizeChecks) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd M(4, 6);
  for (Index i = 0; i < M.size(); ++i) M(i) = std::normal_distribution<double>()(rng);
  const auto op = dense_op(M);
  expect_adjoint_consistent(op, 2);
  EXPECT_THROW(op.apply(Eigen::VectorXd::Zero(5)), std::invalid_argument);
  EXPECT_THROW(op.adjoint(Eigen::VectorXd::Zero(6)), std::invalid_argument);
  Eigen::MatrixXd bad = M;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(dense_op(bad), std::invalid_argument);
}

TEST(SamplingOp, PicksAndScatters) {
  const auto S = sampling_op({1}, 3);  // 0-based index of the second entry
  EXPECT_EQ(S.apply(Eigen::Vector3d(4, 5, 6))(0), 5.0);
  EXPECT_EQ(S.adjoint(Eigen::VectorXd::Ones(1)), Eigen::VectorXd(Eigen::Vector3d(0, 1, 0)));
  EXPECT_THROW(sampling_op({3}, 3), std::out_of_range);
  EXPECT_THROW(sampling_op({1, 1}, 3), std::invalid_argument);
  const auto big = sampling_op({0, 4, 7, 9}, 12);
  expect_adjoint_consistent(big, 3);
  EXPECT_NEAR(spectral_norm(big), 1.0, 1e-12);
}

TEST(PartialDct, FullTransformIsOrthonormal) {
  const Index n = 16;
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) all[static_cast<std::size_t>(k)] = k;
  const Eigen::MatrixXd C = to_dense(partial_dct_op(all, n));
  EXPECT_LE((C.transpose() * C - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
}

TEST(PartialDct, RowSubsetsHaveUnitNorm) {
  std::mt19937_64 rng(5);
  const Index n = 64;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) all[static_cast<std::size_t>(k)] = k;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(5 + trial * 4));
    const auto op = partial_dct_op(all, n);
    EXPECT_NEAR(spectral_norm(op), 1.0, 1e-8);
    expect_adjoint_consistent(op, 10 + static_cast<std::uint64_t>(trial));
  }
  EXPECT_THROW(partial_dct_op({2, 2}, n), std::invalid_argument);
}

TEST(PartialDct, SingleRowIsInnerProduct) {
  const Index n = 10, k = 3;
  const std::vector<Index> rows{k};
  const Eigen::MatrixXd row = dct_rows(rows, n);
  std::mt19937_64 rng(6);
  const Eigen::VectorXd x = random_vec(rng, n);
  EXPECT_NEAR(partial_dct_op(rows, n).apply(x)(0), row.row(0).dot(x), 1e-14);
  EXPECT_NEAR(row(0, 0), std::sqrt(2.0 / n) * std::cos(std::numbers::pi * k / (2.0 * n)), 1e-15);
}

TEST(Toeplitz, ImpulseIsIdentity) {
  const auto op = toeplitz_conv_op(Eigen::VectorXd::Ones(1), 5, 5);
  EXPECT_EQ(to_dense(op), Eigen::MatrixXd(Eigen::MatrixXd::Identity(5, 5)));
}

TEST(Toeplitz, HandConvolution) {
  const auto op = toeplitz_conv_op(Eigen::Vector2d(1, 1), 2, 3);
  const Eigen::VectorXd y = op.apply(Eigen::Vector2d(2, 5));
  EXPECT_EQ(y, Eigen::VectorXd(Eigen::Vector3d(2, 7, 5)));
  EXPECT_THROW(toeplitz_conv_op(Eigen::Vector2d(1, 1), 2, 4), std::invalid_argument);
}

TEST(Toeplitz, MatchesDenseMatrixAndAdjoint) {
  std::mt19937_64 rng(7);
  const Eigen::VectorXd u = random_vec(rng, 30);
  const auto op = toeplitz_conv_op(u, 12, 25);
  EXPECT_LE((to_dense(op) - toeplitz_matrix(u, 12, 25)).norm(), 1e-14);
  expect_adjoint_consistent(op, 8);
}

TEST(Hankel, LiftAdjointWeights) {
  const auto shape = HankelShape::make(2, 2, 3);
  Eigen::Matrix2d expect;
  expect << 1, 2, 2, 3;
  EXPECT_EQ(hankel_lift(Eigen::Vector3d(1, 2, 3), shape), Eigen::MatrixXd(expect));
  EXPECT_EQ(antidiag_weights(shape), Eigen::VectorXd(Eigen::Vector3d(1, 2, 1)));
  EXPECT_THROW(HankelShape::make(2, 2, 4), std::invalid_argument);
  EXPECT_THROW(hankel_lift(Eigen::Vector4d::Zero(), shape), std::invalid_argument);
}

TEST(Hankel, NearSquareDefault) {
  for (Index n = 1; n < 40; ++n) {
    const auto s = HankelShape::near_square(n);
    EXPECT_EQ(s.length(), n);
    EXPECT_EQ(s.rows, (n + 2) / 2);  // ceil((n+1)/2)
    EXPECT_LE(std::abs(s.rows - s.cols), 1);
  }
}

TEST(Hankel, AdjointIdentityProperty) {
  std::mt19937_64 rng(9);
  for (Index n : {3, 8, 15, 40}) {
    const auto shape = HankelShape::near_square(n);
    const Eigen::VectorXd x = random_vec(rng, n);
    Eigen::MatrixXd Z(shape.rows, shape.cols);
    for (Index i = 0; i < Z.size(); ++i) Z(i) = std::normal_distribution<double>()(rng);
    const double lhs = (hankel_lift(x, shape).array() * Z.array()).sum();
    EXPECT_NEAR(lhs, x.dot(hankel_adjoint(Z, shape)), 1e-10 * (1.0 + std::abs(lhs)));
    // Summing x_k w_k times rounds differently from w_k * x_k past three terms.
    const Eigen::VectorXd w = antidiag_weights(shape);
    const Eigen::VectorXd diff = hankel_adjoint(hankel_lift(x, shape), shape) - w.cwiseProduct(x);
    for (Index k = 0; k < n; ++k) EXPECT_LE(std::abs(diff(k)), 1e-15 * w(k) * w(k) * std::abs(x(k)));
  }
}

TEST(SpectralNorm, KnownValuesAndDenseSvd) {
  EXPECT_NEAR(spectral_norm(dense_op(Eigen::MatrixXd::Identity(4, 4))), 1.0, 1e-12);
  EXPECT_NEAR(spectral_norm(dense_op(Eigen::Vector2d(3, 1).asDiagonal().toDenseMatrix())), 3.0, 1e-10);
  EXPECT_EQ(spectral_norm(dense_op(Eigen::MatrixXd::Zero(3, 2))), 0.0);
  std::mt19937_64 rng(10);
  Eigen::MatrixXd M(20, 30);
  for (Index i = 0; i < M.size(); ++i) M(i) = std::normal_distribution<double>()(rng);
  const double ref = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
  EXPECT_LE(std::abs(spectral_norm(dense_op(M)) - ref) / ref, 1e-6);
}

}  // namespace
}  // namespace lpqn
