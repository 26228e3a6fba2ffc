#ifndef DVAE_TENSOR_HPP
#define DVAE_TENSOR_HPP

// Dense numeric carriers and the three kernels the networks are built from.
// Every type is a row-major Eigen object templated on the scalar; the rest of
// the library instantiates it with double.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "dvae/errors.hpp"

namespace dvae {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixX = Matrix<double>;
using VectorX = Vector<double>;

namespace detail {

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

}  // namespace detail

/// Matrix product a*b. Throws DimensionError naming both shapes when the
/// inner extents disagree.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ, " +
                         detail::shape_string(a.rows(), a.cols()) + " vs " +
                         detail::shape_string(b.rows(), b.cols()));
  }
  return a * b;
}

/// Softmax applied independently to each row, with the row maximum
/// subtracted before exponentiation.
template <typename Derived>
Matrix<typename Derived::Scalar> rowwise_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar peak = logits.row(r).maxCoeff();
    Scalar total = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - peak);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return out;
}

/// Scalar logistic function.
template <typename Scalar>
Scalar logistic(Scalar t) {
  // Two-branch form: exp never sees a positive argument.
  if (t >= 0) return Scalar(1) / (Scalar(1) + std::exp(-t));
  const Scalar e = std::exp(t);
  return e / (Scalar(1) + e);
}

/// Elementwise logistic function.
template <typename Derived>
typename Derived::PlainObject sigmoid(const Eigen::MatrixBase<Derived>& t) {
  using Scalar = typename Derived::Scalar;
  return t.unaryExpr([](Scalar v) { return logistic<Scalar>(v); });
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& t) {
  return t.allFinite();
}

}  // namespace dvae

#endif  // DVAE_TENSOR_HPP
