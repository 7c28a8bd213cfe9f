#pragma once

#include <manadmm/core.hpp>

#include <cmath>
#include <random>
#include <utility>

namespace manadmm {

enum class LinearMapKind { Identity, LeftMultiply, GeneralDense };

/// Linear map A between matrix spaces with Frobenius inner products.
///
///  - Identity:      A(X) = X
///  - LeftMultiply:  A(X) = M X, adjoint A*(Y) = M^T Y (acts columnwise)
///  - GeneralDense:  vec(A(X)) = G vec(X) with column-major vec
class LinearMap {
public:
  static LinearMap identity(Shape shape) {
    return LinearMap(LinearMapKind::Identity, Matrix(), shape, shape);
  }

  static LinearMap left_multiply(Matrix m, Eigen::Index input_cols) {
    const Shape in{m.cols(), input_cols};
    const Shape out{m.rows(), input_cols};
    return LinearMap(LinearMapKind::LeftMultiply, std::move(m), in, out);
  }

  static LinearMap general_dense(Matrix g, Shape input, Shape output) {
    if (g.rows() != output.size() || g.cols() != input.size()) {
      throw DimensionError("general_dense: matrix is " +
                           to_string(shape_of(g)) + ", maps " +
                           to_string(input) + " -> " + to_string(output));
    }
    return LinearMap(LinearMapKind::GeneralDense, std::move(g), input, output);
  }

  LinearMapKind kind() const { return kind_; }
  Shape input_shape() const { return in_; }
  Shape output_shape() const { return out_; }
  /// Underlying matrix (empty for the identity).
  const Matrix &matrix() const { return mat_; }

  Matrix apply(const Matrix &x) const {
    check_shape("LinearMap::apply", in_, shape_of(x));
    switch (kind_) {
    case LinearMapKind::Identity:
      return x;
    case LinearMapKind::LeftMultiply:
      return mat_ * x;
    case LinearMapKind::GeneralDense:
      break;
    }
    const Vector v = mat_ * x.reshaped();
    return v.reshaped(out_.rows, out_.cols);
  }

  Matrix adjoint_apply(const Matrix &y) const {
    check_shape("LinearMap::adjoint_apply", out_, shape_of(y));
    switch (kind_) {
    case LinearMapKind::Identity:
      return y;
    case LinearMapKind::LeftMultiply:
      return mat_.transpose() * y;
    case LinearMapKind::GeneralDense:
      break;
    }
    const Vector v = mat_.transpose() * y.reshaped();
    return v.reshaped(in_.rows, in_.cols);
  }

private:
  LinearMap(LinearMapKind kind, Matrix mat, Shape in, Shape out)
      : kind_(kind), mat_(std::move(mat)), in_(in), out_(out) {}

  LinearMapKind kind_;
  Matrix mat_;
  Shape in_;
  Shape out_;
};

struct OperatorNormEstimate {
  Scalar value = 0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of A by power iteration on A*A from a fixed-seed
/// Gaussian start. Stops when successive estimates agree to relative `tol`;
/// if max_iter is reached the last estimate is returned with
/// converged = false.
inline OperatorNormEstimate operator_norm(const LinearMap &a,
                                          Scalar tol = 1e-8,
                                          int max_iter = 1000,
                                          Seed seed = 12345) {
  if (!(tol > 0)) {
    throw ParameterError("operator_norm: tol must be positive");
  }
  OperatorNormEstimate est;
  if (a.kind() == LinearMapKind::Identity) {
    est.value = 1.0;
    est.converged = true;
    return est;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal;
  const Shape in = a.input_shape();
  Matrix v(in.rows, in.cols);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v.data()[i] = normal(rng);
  }
  v /= v.norm();
  Scalar prev = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix w = a.adjoint_apply(a.apply(v));
    const Scalar wn = w.norm();
    est.iterations = it;
    if (wn == 0) {
      est.value = 0;
      est.converged = true;
      return est;
    }
    // Rayleigh quotient of A*A at unit v is ||A v||^2
    const Scalar sigma = std::sqrt(inner(v, w));
    v = w / wn;
    est.value = sigma;
    if (it > 1 && std::abs(sigma - prev) <= tol * sigma) {
      est.converged = true;
      break;
    }
    prev = sigma;
  }
  return est;
}

} // namespace manadmm
