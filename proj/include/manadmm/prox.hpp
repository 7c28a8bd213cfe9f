#pragma once

#include <manadmm/core.hpp>

#include <cmath>
#include <memory>
#include <string>

namespace manadmm {

/// Proper closed convex regularizer h on matrices of a fixed shape.
///
/// New regularizers (group norms, indicator functions, ...) plug into the
/// solvers by implementing this interface.
class Regularizer {
public:
  explicit Regularizer(Shape shape) : shape_(shape) {}
  virtual ~Regularizer() = default;

  Shape shape() const { return shape_; }

  virtual std::string name() const = 0;
  virtual Scalar eval(const Matrix &z) const = 0;

  /// argmin_u h(u) + ||u - z||^2 / (2 mu), mu > 0.
  virtual Matrix prox(Scalar mu, const Matrix &z) const = 0;

  /// dist(v, subdifferential of h at y).
  virtual Scalar subdiff_distance(const Matrix &y, const Matrix &v) const = 0;

  /// One element of the subdifferential at y (used by subgradient methods).
  virtual Matrix subgradient(const Matrix &y) const = 0;

  /// Lipschitz constant of h w.r.t. the Frobenius norm.
  virtual Scalar lipschitz_constant() const = 0;

  /// ||z - prox_{mu h}(z)||, bounded by mu * lipschitz_constant().
  Scalar moreau_gap(Scalar mu, const Matrix &z) const {
    return (z - prox(mu, z)).norm();
  }

protected:
  void check(const char *where, const Matrix &z) const {
    check_shape(where, shape_, shape_of(z));
  }
  static void check_mu(Scalar mu) {
    if (!(mu > 0)) {
      throw ParameterError("prox parameter must be positive, got " +
                           std::to_string(mu));
    }
  }

private:
  Shape shape_;
};

/// h(z) = weight * sum |z_ij|.
class ScaledL1 final : public Regularizer {
public:
  ScaledL1(Shape shape, Scalar weight) : Regularizer(shape), weight_(weight) {
    if (!(weight >= 0)) {
      throw ParameterError("l1 weight must be nonnegative");
    }
  }

  Scalar weight() const { return weight_; }
  std::string name() const override { return "l1"; }

  Scalar eval(const Matrix &z) const override {
    check("ScaledL1::eval", z);
    return weight_ * z.cwiseAbs().sum();
  }

  Matrix prox(Scalar mu, const Matrix &z) const override {
    check("ScaledL1::prox", z);
    check_mu(mu);
    const Scalar t = mu * weight_;
    return z.unaryExpr([t](Scalar v) {
      const Scalar a = std::abs(v) - t;
      return a > 0 ? std::copysign(a, v) : Scalar(0);
    });
  }

  Scalar subdiff_distance(const Matrix &y, const Matrix &v) const override {
    check("ScaledL1::subdiff_distance", y);
    check("ScaledL1::subdiff_distance", v);
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const Scalar yi = y.data()[i];
      const Scalar vi = v.data()[i];
      Scalar d;
      if (yi != 0) {
        d = vi - std::copysign(weight_, yi);
      } else {
        d = std::max(std::abs(vi) - weight_, Scalar(0));
      }
      acc += d * d;
    }
    return std::sqrt(acc);
  }

  /// weight * sign(y) with sign(0) = 0.
  Matrix subgradient(const Matrix &y) const override {
    check("ScaledL1::subgradient", y);
    const Scalar w = weight_;
    return y.unaryExpr([w](Scalar v) {
      return v > 0 ? w : (v < 0 ? -w : Scalar(0));
    });
  }

  Scalar lipschitz_constant() const override {
    return weight_ * std::sqrt(static_cast<Scalar>(shape().size()));
  }

private:
  Scalar weight_;
};

/// h = 0.
class ZeroRegularizer final : public Regularizer {
public:
  using Regularizer::Regularizer;

  std::string name() const override { return "zero"; }
  Scalar eval(const Matrix &z) const override {
    check("ZeroRegularizer::eval", z);
    return 0;
  }
  Matrix prox(Scalar mu, const Matrix &z) const override {
    check("ZeroRegularizer::prox", z);
    check_mu(mu);
    return z;
  }
  Scalar subdiff_distance(const Matrix &y, const Matrix &v) const override {
    check("ZeroRegularizer::subdiff_distance", y);
    check("ZeroRegularizer::subdiff_distance", v);
    return v.norm();
  }
  Matrix subgradient(const Matrix &y) const override {
    check("ZeroRegularizer::subgradient", y);
    return Matrix::Zero(y.rows(), y.cols());
  }
  Scalar lipschitz_constant() const override { return 0; }
};

using RegularizerPtr = std::shared_ptr<const Regularizer>;

inline RegularizerPtr make_l1(Shape shape, Scalar weight) {
  return std::make_shared<ScaledL1>(shape, weight);
}

inline RegularizerPtr make_zero(Shape shape) {
  return std::make_shared<ZeroRegularizer>(shape);
}

} // namespace manadmm
