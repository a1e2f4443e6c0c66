// Second-order tensor helpers on Eigen 3x3 matrices.
#pragma once

#include <cmath>

#include <Eigen/Core>

namespace advexp::tensor {

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Derived>
typename Derived::Scalar mean(const Eigen::MatrixBase<Derived>& t) {
  return t.trace() / typename Derived::Scalar(3);
}

template <typename Derived>
Mat3<typename Derived::Scalar> deviator(const Eigen::MatrixBase<Derived>& t) {
  return t - mean(t) * Mat3<typename Derived::Scalar>::Identity();
}

/// Double contraction a : b.
template <typename A, typename B>
typename A::Scalar ddot(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b).sum();
}

/// Von Mises equivalent stress sqrt(3/2) |dev(t)|.
template <typename Derived>
typename Derived::Scalar von_mises(const Eigen::MatrixBase<Derived>& t) {
  using std::sqrt;
  return sqrt(typename Derived::Scalar(1.5)) * deviator(t).norm();
}

template <typename Derived>
Mat3<typename Derived::Scalar> symmetric(const Eigen::MatrixBase<Derived>& t) {
  return typename Derived::Scalar(0.5) * (t + t.transpose());
}

template <typename Scalar>
Mat3<Scalar> diag(Scalar a, Scalar b, Scalar c) {
  return Eigen::Matrix<Scalar, 3, 1>(a, b, c).asDiagonal();
}

}  // namespace advexp::tensor
