#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace manadmm;
using test_util::gaussian;

namespace {

std::vector<LinearMap> maps() {
  return {LinearMap::identity({6, 2}),
          LinearMap::left_multiply(gaussian(9, 6, 1), 2),
          LinearMap::general_dense(gaussian(10, 12, 2), {6, 2}, {5, 2}),
          LinearMap::left_multiply(gaussian(4, 6, 3), 3)};
}

Scalar top_singular_value(const Matrix &m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

} // namespace

TEST(LinearMap, IdentityAndLeftMultiplyExamples) {
  const Matrix x = gaussian(3, 2, 4);
  EXPECT_EQ(LinearMap::identity({3, 2}).apply(x), x);
  EXPECT_EQ(LinearMap::identity({3, 2}).adjoint_apply(x), x);
  Matrix yt(2, 2);
  yt << 1, 0, 0, 2;
  const LinearMap a = LinearMap::left_multiply(yt, 1);
  const Matrix out = a.apply(Matrix::Ones(2, 1));
  EXPECT_EQ(out(0, 0), 1);
  EXPECT_EQ(out(1, 0), 2);
}

TEST(LinearMap, LeftMultiplyAdjointIsTranspose) {
  const Matrix yt = gaussian(7, 4, 5);
  const LinearMap a = LinearMap::left_multiply(yt, 3);
  const Matrix lam = gaussian(7, 3, 6);
  EXPECT_LE((a.adjoint_apply(lam) - yt.transpose() * lam).norm(), 1e-13);
}

TEST(LinearMap, GeneralDenseActsOnColumnMajorVectorization) {
  const Matrix g = gaussian(6, 4, 7);
  const LinearMap a = LinearMap::general_dense(g, {2, 2}, {3, 2});
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  Vector vx(4);
  vx << 1, 3, 2, 4; // column-major
  const Vector expected = g * vx;
  const Matrix y = a.apply(x);
  for (Eigen::Index j = 0; j < 2; ++j) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_NEAR(y(i, j), expected(i + 3 * j), 1e-14);
    }
  }
}

TEST(LinearMap, ShapeErrors) {
  const LinearMap a = LinearMap::left_multiply(gaussian(4, 3, 8), 2);
  EXPECT_THROW(a.apply(Matrix::Zero(3, 3)), DimensionError);
  EXPECT_THROW(a.adjoint_apply(Matrix::Zero(3, 2)), DimensionError);
  EXPECT_THROW(LinearMap::general_dense(Matrix::Zero(5, 5), {2, 2}, {2, 2}),
               DimensionError);
}

TEST(LinearMap, Linearity) {
  for (const LinearMap &a : maps()) {
    const Shape in = a.input_shape();
    const Matrix x = gaussian(in.rows, in.cols, 10);
    const Matrix z = gaussian(in.rows, in.cols, 11);
    const Matrix lhs = a.apply(1.7 * x - 0.3 * z);
    const Matrix rhs = 1.7 * a.apply(x) - 0.3 * a.apply(z);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(LinearMap, AdjointIdentityOverRandomPairs) {
  for (const LinearMap &a : maps()) {
    const Shape in = a.input_shape();
    const Shape out = a.output_shape();
    for (std::uint64_t s = 0; s < 100; ++s) {
      const Matrix x = gaussian(in.rows, in.cols, 1000 + s);
      const Matrix y = gaussian(out.rows, out.cols, 2000 + s);
      const Scalar lhs = inner(a.apply(x), y);
      const Scalar rhs = inner(x, a.adjoint_apply(y));
      EXPECT_LE(std::abs(lhs - rhs),
                1e-12 * std::max(1.0, a.apply(x).norm() * y.norm()));
    }
  }
}

TEST(OperatorNorm, IdentityAndDiagonal) {
  EXPECT_EQ(operator_norm(LinearMap::identity({4, 1})).value, 1.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  const OperatorNormEstimate e = operator_norm(LinearMap::left_multiply(d, 1));
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(e.value, 3.0, 1e-7);
}

TEST(OperatorNorm, MatchesDenseSvd) {
  const Matrix g = gaussian(10, 6, 20);
  const OperatorNormEstimate e =
      operator_norm(LinearMap::left_multiply(g, 1), 1e-12, 10000);
  EXPECT_TRUE(e.converged);
  EXPECT_LE(std::abs(e.value - top_singular_value(g)) / top_singular_value(g),
            1e-6);
  // columnwise action on several columns has the same norm
  const OperatorNormEstimate e3 =
      operator_norm(LinearMap::left_multiply(g, 3), 1e-12, 10000);
  EXPECT_NEAR(e3.value, top_singular_value(g), 1e-6 * top_singular_value(g));
}

TEST(OperatorNorm, BoundsEveryProbe) {
  for (const LinearMap &a : maps()) {
    const Scalar tol = 1e-8;
    const Scalar sigma = operator_norm(a, tol, 5000).value;
    const Shape in = a.input_shape();
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Matrix x = gaussian(in.rows, in.cols, 3000 + s);
      EXPECT_GE(sigma, a.apply(x).norm() / x.norm() - tol * sigma);
    }
  }
}

TEST(OperatorNorm, FlagsNonConvergenceAndRejectsBadTol) {
  const Matrix g = gaussian(30, 30, 21);
  const OperatorNormEstimate e =
      operator_norm(LinearMap::left_multiply(g, 1), 1e-15, 2);
  EXPECT_FALSE(e.converged);
  EXPECT_EQ(e.iterations, 2);
  EXPECT_GT(e.value, 0);
  EXPECT_THROW(operator_norm(LinearMap::identity({2, 1}), 0.0), ParameterError);
}
