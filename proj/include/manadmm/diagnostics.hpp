#pragma once

#include <manadmm/core.hpp>
#include <manadmm/problems.hpp>

#include <algorithm>
#include <cmath>

namespace manadmm {

/// Residuals of an approximate KKT triple (x, y, lambda):
///   stationarity  ||P_{T_x M}(grad f(x) - A* lambda)||
///   dual          dist(-lambda, subdifferential of h at y)
///   primal        ||A x - y||
struct KktResiduals {
  Scalar stationarity = 0;
  Scalar dual = 0;
  Scalar primal = 0;

  Scalar max() const { return std::max({stationarity, dual, primal}); }
};

class DiagnosticError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// KKT residuals given a precomputed Euclidean gradient of f at x.
inline KktResiduals kkt_residuals_with_gradient(const ProblemInstance &pb,
                                                const Matrix &x,
                                                const Matrix &euclid_grad,
                                                const Matrix &y,
                                                const Matrix &lambda,
                                                const Matrix *ax = nullptr) {
  const Scalar feas = pb.manifold.feasibility_residual_raw(x);
  if (!(feas <= 1e-6)) {
    throw DiagnosticError("kkt_residuals: x is off the manifold (residual " +
                          std::to_string(feas) + ")");
  }
  check_shape("kkt_residuals", pb.A.output_shape(), shape_of(y));
  check_shape("kkt_residuals", pb.A.output_shape(), shape_of(lambda));
  KktResiduals r;
  // projection is linear, so one projection of the fused vector suffices
  r.stationarity =
      pb.manifold
          .project_tangent_raw(x, euclid_grad - pb.A.adjoint_apply(lambda))
          .norm();
  r.dual = pb.h->subdiff_distance(y, -lambda);
  r.primal = ax ? (*ax - y).norm() : (pb.A.apply(x) - y).norm();
  return r;
}

inline KktResiduals kkt_residuals(const ProblemInstance &pb, const Matrix &x,
                                  const Matrix &y, const Matrix &lambda) {
  return kkt_residuals_with_gradient(pb, x, pb.f.gradient(x), y, lambda);
}

/// lambda-bar = lambda_prev - rho_prev (A x_cur - y_cur), the multiplier
/// attached to the certified triple (x_cur, y_cur, lambda-bar).
inline Matrix bar_lambda(const Matrix &lambda_prev, Scalar rho_prev,
                         const Matrix &ax_cur, const Matrix &y_cur) {
  if (!(rho_prev > 0)) {
    throw ParameterError("bar_lambda: rho must be positive");
  }
  check_shape("bar_lambda", shape_of(lambda_prev), shape_of(ax_cur));
  check_shape("bar_lambda", shape_of(lambda_prev), shape_of(y_cur));
  return lambda_prev - rho_prev * (ax_cur - y_cur);
}

/// Percentage of entries with magnitude below `threshold`.
inline Scalar sparsity(const Matrix &x, Scalar threshold = 1e-4) {
  if (x.size() == 0) {
    return 0;
  }
  const auto small = (x.array().abs() < threshold).count();
  return 100.0 * static_cast<Scalar>(small) / static_cast<Scalar>(x.size());
}

/// Spectral norm of B^T X for an orthonormal basis B; 0 iff X is
/// orthogonal to span(B).
inline Scalar subspace_alignment(const Matrix &x, const Matrix &basis) {
  if (x.rows() != basis.rows()) {
    throw DimensionError("subspace_alignment: row mismatch");
  }
  const Matrix m = basis.transpose() * x;
  if (m.size() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

} // namespace manadmm
