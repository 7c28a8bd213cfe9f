#pragma once

#include <manadmm/core.hpp>
#include <manadmm/linop.hpp>
#include <manadmm/manifold.hpp>
#include <manadmm/prox.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace manadmm {

enum class ProblemFamily { SPCA, Classifier, DPCP, Custom };

inline std::string to_string(ProblemFamily f) {
  switch (f) {
  case ProblemFamily::SPCA:
    return "spca";
  case ProblemFamily::Classifier:
    return "rlc";
  case ProblemFamily::DPCP:
    return "dpcp";
  case ProblemFamily::Custom:
    break;
  }
  return "custom";
}

/// Row scaling of the SPCA data matrix.
enum class SpcaScaling {
  None,    ///< raw i.i.d. N(0, 1) entries
  UnitRows ///< each row rescaled to unit Euclidean norm
};

struct SmoothTerm {
  std::function<Scalar(const Matrix &)> value;
  std::function<Matrix(const Matrix &)> gradient;
};

/// Generation parameters; only the fields relevant to the family are used.
struct ProblemParams {
  Eigen::Index n = 0;  ///< ambient rows (SPCA, DPCP)
  Eigen::Index m = 0;  ///< data rows (SPCA) or dimension (classifier)
  Eigen::Index p = 0;  ///< manifold columns
  Eigen::Index N = 0;  ///< samples (classifier)
  Eigen::Index p1 = 0; ///< inliers (DPCP)
  Eigen::Index p2 = 0; ///< outliers (DPCP)
  Scalar mu = 0;
  Scalar sigma2 = 0;
  Seed seed = 0;
  SpcaScaling scaling = SpcaScaling::UnitRows;
  bool normalize_columns = true; ///< DPCP column normalization
  Retraction retraction = Retraction::QR;
};

/// min_{x in M} f(x) + h(A x).
///
/// `data` keeps the generating matrices so the instance can be written to
/// disk and rebuilt bit-for-bit.
struct ProblemInstance {
  std::string name;
  ProblemFamily family = ProblemFamily::Custom;
  ProblemParams params;
  Manifold manifold;
  SmoothTerm f;
  RegularizerPtr h;
  LinearMap A;
  std::optional<Matrix> ground_truth;
  /// Shared with the closures in `f`, so copies of an instance stay valid.
  std::map<std::string, std::shared_ptr<const Matrix>> data;
};

inline Scalar objective(const ProblemInstance &pb, const Matrix &x) {
  return pb.f.value(x) + pb.h->eval(pb.A.apply(x));
}

namespace detail {

inline Scalar sigmoid(Scalar t) {
  if (t >= 0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const Scalar e = std::exp(t);
  return e / (1.0 + e);
}

} // namespace detail

/// SPCA from a given data matrix (m x n): f(X) = -1/2 ||A X||_F^2 on
/// St(n, p), h = mu ||X||_1, linear map = identity.
inline ProblemInstance spca_from_data(Matrix a_data, Eigen::Index p, Scalar mu,
                                      Retraction retraction = Retraction::QR) {
  const Eigen::Index m = a_data.rows();
  const Eigen::Index n = a_data.cols();
  if (p < 1 || p >= std::min(m, n)) {
    throw DimensionError("spca requires 1 <= p < min(m, n)");
  }
  if (!(mu >= 0)) {
    throw ParameterError("spca requires mu >= 0");
  }
  ProblemInstance pb{
      .name = "spca",
      .family = ProblemFamily::SPCA,
      .params = {},
      .manifold = Manifold::stiefel(n, p, retraction),
      .f = {},
      .h = make_l1({n, p}, mu),
      .A = LinearMap::identity({n, p}),
      .ground_truth = std::nullopt,
      .data = {},
  };
  pb.params.n = n;
  pb.params.m = m;
  pb.params.p = p;
  pb.params.mu = mu;
  pb.params.retraction = retraction;
  auto a = std::make_shared<const Matrix>(std::move(a_data));
  pb.data["A"] = a;
  pb.f.value = [a](const Matrix &x) {
    return -0.5 * (*a * x).squaredNorm();
  };
  pb.f.gradient = [a](const Matrix &x) -> Matrix {
    return -(a->transpose() * (*a * x));
  };
  return pb;
}

/// Seeded SPCA instance with an m x n Gaussian data matrix.
inline ProblemInstance spca_instance(Eigen::Index n, Eigen::Index m,
                                     Eigen::Index p, Scalar mu, Seed seed,
                                     SpcaScaling scaling = SpcaScaling::UnitRows,
                                     Retraction retraction = Retraction::QR) {
  if (n < 1 || m < 1 || p < 1 || p >= std::min(m, n)) {
    throw DimensionError("spca requires 1 <= p < min(m, n)");
  }
  std::mt19937_64 rng(seed);
  Matrix a = standard_normal(m, n, rng);
  if (scaling == SpcaScaling::UnitRows) {
    a = a.rowwise().normalized();
  }
  ProblemInstance pb = spca_from_data(std::move(a), p, mu, retraction);
  pb.params.seed = seed;
  pb.params.scaling = scaling;
  return pb;
}

/// Logistic-square loss on the sphere S^{m-1}:
///   f(x) = sum_i (1 - sigmoid(b_i x^T a_i))^2,  h = mu ||x||_1.
/// `features` is N x m (row i is a_i^T), `labels` is N x 1 with entries +-1.
inline ProblemInstance classifier_from_data(Matrix features, Matrix labels,
                                            Scalar mu) {
  const Eigen::Index n_samples = features.rows();
  const Eigen::Index m = features.cols();
  if (n_samples < 1 || m < 1) {
    throw DimensionError("classifier requires N >= 1 and m >= 1");
  }
  check_shape("classifier labels", {n_samples, 1}, shape_of(labels));
  if (!(mu >= 0)) {
    throw ParameterError("classifier requires mu >= 0");
  }
  ProblemInstance pb{
      .name = "rlc",
      .family = ProblemFamily::Classifier,
      .params = {},
      .manifold = Manifold::sphere(m),
      .f = {},
      .h = make_l1({m, 1}, mu),
      .A = LinearMap::identity({m, 1}),
      .ground_truth = std::nullopt,
      .data = {},
  };
  pb.params.m = m;
  pb.params.N = n_samples;
  pb.params.p = 1;
  pb.params.mu = mu;
  auto a = std::make_shared<const Matrix>(std::move(features));
  auto b = std::make_shared<const Matrix>(std::move(labels));
  pb.data["features"] = a;
  pb.data["labels"] = b;
  pb.f.value = [a, b](const Matrix &x) {
    const Vector t = (*a * x.col(0)).cwiseProduct(b->col(0));
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const Scalar s = detail::sigmoid(-t(i)); // 1 - sigmoid(t)
      acc += s * s;
    }
    return acc;
  };
  pb.f.gradient = [a, b](const Matrix &x) -> Matrix {
    const Vector t = (*a * x.col(0)).cwiseProduct(b->col(0));
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const Scalar s = detail::sigmoid(-t(i));
      // d/dt (1 - sigmoid(t))^2 = -2 sigmoid(-t)^2 sigmoid(t)
      w(i) = -2.0 * s * s * detail::sigmoid(t(i)) * (*b)(i, 0);
    }
    return a->transpose() * w;
  };
  return pb;
}

/// Seeded classifier instance: true parameter from N(0, I_m) normalized to
/// the sphere, features N(0, I_m), labels sign(x^T a_i + eps_i) with
/// eps_i ~ N(0, sigma2) and ties assigned -1.
inline ProblemInstance classifier_instance(Eigen::Index m, Eigen::Index n_samples,
                                           Scalar sigma2, Scalar mu, Seed seed) {
  if (m < 1 || n_samples < 1) {
    throw DimensionError("classifier requires N >= 1 and m >= 1");
  }
  if (!(sigma2 >= 0)) {
    throw ParameterError("classifier requires sigma2 >= 0");
  }
  std::mt19937_64 rng(seed);
  Matrix x_true = standard_normal(m, 1, rng);
  x_true /= x_true.norm();
  Matrix features = standard_normal(n_samples, m, rng);
  const Matrix noise = std::sqrt(sigma2) * standard_normal(n_samples, 1, rng);
  Matrix labels(n_samples, 1);
  const Vector margin = features * x_true.col(0) + noise.col(0);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    labels(i, 0) = margin(i) > 0 ? 1.0 : -1.0;
  }
  ProblemInstance pb =
      classifier_from_data(std::move(features), std::move(labels), mu);
  pb.params.sigma2 = sigma2;
  pb.params.seed = seed;
  pb.ground_truth = std::move(x_true);
  return pb;
}

/// DPCP: min ||Y^T X||_1 on St(n, p); f = 0, A(X) = Y^T X.
inline ProblemInstance dpcp_from_data(Matrix y, Eigen::Index p,
                                      Retraction retraction = Retraction::QR) {
  const Eigen::Index n = y.rows();
  if (p < 1 || p >= n) {
    throw DimensionError("dpcp requires 1 <= p < n");
  }
  const Eigen::Index cols = y.cols();
  ProblemInstance pb{
      .name = "dpcp",
      .family = ProblemFamily::DPCP,
      .params = {},
      .manifold = Manifold::stiefel(n, p, retraction),
      .f = {},
      .h = make_l1({cols, p}, 1.0),
      .A = LinearMap::left_multiply(y.transpose(), p),
      .ground_truth = std::nullopt,
      .data = {},
  };
  pb.params.n = n;
  pb.params.p = p;
  pb.params.mu = 1.0;
  pb.params.retraction = retraction;
  pb.f.value = [](const Matrix &) { return Scalar(0); };
  pb.f.gradient = [n, p](const Matrix &) -> Matrix {
    return Matrix::Zero(n, p);
  };
  pb.data["Y"] = std::make_shared<const Matrix>(std::move(y));
  return pb;
}

/// Seeded DPCP instance: p1 inliers B C in a d = n - p dimensional subspace
/// with orthonormal basis B, p2 Gaussian outliers, columns optionally
/// normalized and randomly permuted. ground_truth holds B.
inline ProblemInstance dpcp_instance(Eigen::Index n, Eigen::Index p,
                                     Eigen::Index p1, Eigen::Index p2, Seed seed,
                                     bool normalize_columns = true,
                                     Retraction retraction = Retraction::QR) {
  if (p < 1 || p >= n) {
    throw DimensionError("dpcp requires 1 <= p < n");
  }
  if (p1 < 1 || p2 < 0) {
    throw DimensionError("dpcp requires p1 >= 1 and p2 >= 0");
  }
  const Eigen::Index d = n - p;
  std::mt19937_64 rng(seed);
  const Matrix basis = Manifold::qr_factor(standard_normal(n, d, rng));
  const Matrix coeffs = standard_normal(d, p1, rng);
  const Matrix outliers = standard_normal(n, p2, rng);
  Matrix y(n, p1 + p2);
  y.leftCols(p1) = basis * coeffs;
  y.rightCols(p2) = outliers;
  if (normalize_columns) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const Scalar nrm = y.col(j).norm();
      if (nrm > 0) {
        y.col(j) /= nrm;
      }
    }
  }
  // column shuffle: Fisher-Yates with explicit draws so the permutation does
  // not depend on the standard library's shuffle implementation
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(y.cols()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  Matrix shuffled(n, y.cols());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    shuffled.col(static_cast<Eigen::Index>(j)) = y.col(perm[j]);
  }
  ProblemInstance pb = dpcp_from_data(std::move(shuffled), p, retraction);
  pb.params.p1 = p1;
  pb.params.p2 = p2;
  pb.params.seed = seed;
  pb.params.normalize_columns = normalize_columns;
  pb.ground_truth = basis;
  return pb;
}

} // namespace manadmm
