#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace manadmm {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Seed = std::uint64_t;

/// Raised when matrix shapes do not match what an operation expects.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for invalid scalar parameters (non-positive step sizes, etc.).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  friend bool operator==(const Shape &, const Shape &) = default;
  Eigen::Index size() const { return rows * cols; }
};

inline Shape shape_of(const Matrix &m) { return {m.rows(), m.cols()}; }

inline std::string to_string(const Shape &s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

inline void check_shape(const char *where, const Shape &expected,
                        const Shape &actual) {
  if (!(expected == actual)) {
    throw DimensionError(std::string(where) + ": expected " +
                         to_string(expected) + ", got " + to_string(actual));
  }
}

/// Frobenius inner product.
inline Scalar inner(const Matrix &a, const Matrix &b) {
  return (a.array() * b.array()).sum();
}

inline bool all_finite(const Matrix &m) { return m.allFinite(); }

} // namespace manadmm
