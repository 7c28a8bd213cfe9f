#pragma once

#include <manadmm/core.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace manadmm {

enum class ManifoldKind { Sphere, Stiefel };

/// Retraction used on the Stiefel manifold. The sphere always uses metric
/// normalization, which coincides with both choices for p = 1.
enum class Retraction { QR, Polar };

class ManifoldPoint;
class TangentVector;

/// Compact embedded submanifold of R^{n x p}: the unit sphere S^{m-1}
/// (stored as an m x 1 matrix) or the Stiefel manifold St(n, p).
///
/// The Euclidean (Frobenius) inner product is used on every tangent space.
class Manifold {
public:
  static Manifold sphere(Eigen::Index m) {
    if (m < 1) {
      throw DimensionError("sphere requires m >= 1");
    }
    return Manifold(ManifoldKind::Sphere, m, 1, Retraction::QR);
  }

  static Manifold stiefel(Eigen::Index n, Eigen::Index p,
                          Retraction retraction = Retraction::QR) {
    if (p < 1 || p > n) {
      throw DimensionError("stiefel requires 1 <= p <= n (got n=" +
                           std::to_string(n) + ", p=" + std::to_string(p) +
                           ")");
    }
    return Manifold(ManifoldKind::Stiefel, n, p, retraction);
  }

  ManifoldKind kind() const { return kind_; }
  Retraction retraction() const { return retraction_; }
  Shape shape() const { return {rows_, cols_}; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  friend bool operator==(const Manifold &, const Manifold &) = default;

  /// v - (x^T v) x on the sphere, v - x sym(x^T v) on Stiefel.
  Matrix project_tangent_raw(const Matrix &x, const Matrix &v) const {
    check_shape("project_tangent", shape(), shape_of(v));
    check_shape("project_tangent", shape(), shape_of(x));
    if (kind_ == ManifoldKind::Sphere) {
      return v - x * x.col(0).dot(v.col(0));
    }
    const Matrix xtv = x.transpose() * v;
    return v - x * (0.5 * (xtv + xtv.transpose()));
  }

  Matrix retract_raw(const Matrix &x, const Matrix &u) const {
    check_shape("retract", shape(), shape_of(u));
    check_shape("retract", shape(), shape_of(x));
    const Matrix z = x + u;
    if (kind_ == ManifoldKind::Sphere) {
      return z / z.norm();
    }
    if (retraction_ == Retraction::Polar) {
      // (x + u)(I + u^T u)^{-1/2} for tangent u
      const Matrix s = Matrix::Identity(cols_, cols_) + u.transpose() * u;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
      const Vector inv_sqrt = eig.eigenvalues().array().rsqrt();
      return z * (eig.eigenvectors() * inv_sqrt.asDiagonal() *
                  eig.eigenvectors().transpose());
    }
    return qr_factor(z);
  }

  Scalar feasibility_residual_raw(const Matrix &x) const {
    check_shape("feasibility_residual", shape(), shape_of(x));
    if (kind_ == ManifoldKind::Sphere) {
      return std::abs(x.norm() - 1.0);
    }
    return (x.transpose() * x - Matrix::Identity(cols_, cols_)).norm();
  }

  /// Q factor of a thin QR decomposition with the diagonal of R made
  /// nonnegative, so the factor is unique for full-column-rank input.
  static Matrix qr_factor(const Matrix &z) {
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
    const Matrix &r = qr.matrixQR();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (r(j, j) < 0) {
        q.col(j) = -q.col(j);
      }
    }
    return q;
  }

  inline ManifoldPoint random_point(Seed seed) const;
  inline ManifoldPoint point(Matrix data, Scalar tol = 1e-10) const;
  inline TangentVector project_tangent(const ManifoldPoint &x,
                                       const Matrix &v) const;
  inline TangentVector riemannian_gradient(const ManifoldPoint &x,
                                           const Matrix &euclid_grad) const;
  inline ManifoldPoint retract(const ManifoldPoint &x,
                               const TangentVector &u) const;
  inline Scalar feasibility_residual(const ManifoldPoint &x) const;

private:
  Manifold(ManifoldKind kind, Eigen::Index rows, Eigen::Index cols,
           Retraction retraction)
      : kind_(kind), rows_(rows), cols_(cols), retraction_(retraction) {}

  ManifoldKind kind_;
  Eigen::Index rows_;
  Eigen::Index cols_;
  Retraction retraction_;
};

/// A point on a manifold. Only produced by sampling, retraction or a
/// checked conversion, so its feasibility residual is small.
class ManifoldPoint {
public:
  const Matrix &matrix() const { return data_; }
  const Manifold &manifold() const { return manifold_; }

private:
  friend class Manifold;
  ManifoldPoint(Manifold m, Matrix data)
      : manifold_(std::move(m)), data_(std::move(data)) {}

  Manifold manifold_;
  Matrix data_;
};

/// A tangent vector at `base`. Produced by tangent projection.
class TangentVector {
public:
  const Matrix &matrix() const { return data_; }
  const Matrix &base() const { return base_; }

  TangentVector scaled(Scalar s) const {
    return TangentVector(base_, s * data_);
  }

  Scalar norm() const { return data_.norm(); }

private:
  friend class Manifold;
  TangentVector(Matrix base, Matrix data)
      : base_(std::move(base)), data_(std::move(data)) {}

  Matrix base_;
  Matrix data_;
};

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols,
                              std::mt19937_64 &rng) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // column-major fill, fixed order for reproducibility
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

ManifoldPoint Manifold::random_point(Seed seed) const {
  std::mt19937_64 rng(seed);
  Matrix g = standard_normal(rows_, cols_, rng);
  if (kind_ == ManifoldKind::Sphere) {
    return ManifoldPoint(*this, g / g.norm());
  }
  return ManifoldPoint(*this, qr_factor(g));
}

ManifoldPoint Manifold::point(Matrix data, Scalar tol) const {
  check_shape("Manifold::point", shape(), shape_of(data));
  const Scalar r = feasibility_residual_raw(data);
  if (!(r <= tol)) {
    throw ParameterError("point is not on the manifold (residual " +
                         std::to_string(r) + ")");
  }
  return ManifoldPoint(*this, std::move(data));
}

TangentVector Manifold::project_tangent(const ManifoldPoint &x,
                                        const Matrix &v) const {
  return TangentVector(x.matrix(), project_tangent_raw(x.matrix(), v));
}

TangentVector Manifold::riemannian_gradient(const ManifoldPoint &x,
                                            const Matrix &euclid_grad) const {
  return project_tangent(x, euclid_grad);
}

ManifoldPoint Manifold::retract(const ManifoldPoint &x,
                                const TangentVector &u) const {
  return ManifoldPoint(*this, retract_raw(x.matrix(), u.matrix()));
}

Scalar Manifold::feasibility_residual(const ManifoldPoint &x) const {
  return feasibility_residual_raw(x.matrix());
}

struct RetractionConstants {
  Scalar alpha = 0; ///< max ||R_x(u) - x|| / ||u||
  Scalar beta = 0;  ///< max ||R_x(u) - x - u|| / ||u||^2
};

/// Empirical estimates of the constants in
///   ||R_x(u) - x|| <= alpha ||u||,  ||R_x(u) - x - u|| <= beta ||u||^2
/// from random basepoints and random tangent directions with norms spread
/// over (0, radius]. Samples with u = 0 are skipped.
inline RetractionConstants
estimate_retraction_constants(const Manifold &m, int n_samples, Scalar radius,
                              Seed seed = 0x5eed) {
  if (n_samples < 1) {
    throw ParameterError("n_samples must be >= 1");
  }
  if (!(radius > 0)) {
    throw ParameterError("radius must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  RetractionConstants c;
  for (int s = 0; s < n_samples; ++s) {
    const ManifoldPoint x = m.random_point(rng());
    const Matrix dir =
        m.project_tangent_raw(x.matrix(), standard_normal(m.rows(), m.cols(), rng));
    const Scalar dn = dir.norm();
    if (dn == 0) {
      continue;
    }
    // log-uniform over two decades below the radius; smaller steps lose the
    // second-order remainder to cancellation
    const Scalar t = radius * std::pow(10.0, -2.0 * unif(rng));
    const Matrix u = (t / dn) * dir;
    const Scalar un = u.norm();
    if (un == 0) {
      continue;
    }
    const Matrix r = m.retract_raw(x.matrix(), u);
    c.alpha = std::max(c.alpha, (r - x.matrix()).norm() / un);
    c.beta = std::max(c.beta, (r - x.matrix() - u).norm() / (un * un));
  }
  return c;
}

} // namespace manadmm
