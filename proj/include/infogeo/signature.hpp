#pragma once

#include <Eigen/Eigenvalues>

#include "infogeo/metric.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

/// Counts of positive, negative and zero eigenvalues.
struct Signature {
  int n_plus = 0;
  int n_minus = 0;
  int n_zero = 0;

  bool operator==(const Signature&) const = default;
};

/// Signature of a symmetric matrix. Eigenvalues with magnitude at most
/// 1e-10 * max |eigenvalue| count as zero.
template <typename Derived>
Signature definiteness(const Eigen::MatrixBase<Derived>& g) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(Matrix<Scalar>(g), Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const Scalar largest = ev.cwiseAbs().maxCoeff();
  const Scalar threshold = Scalar(1e-10) * largest;
  Signature s;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= threshold || largest == 0)
      ++s.n_zero;
    else if (ev(i) > 0)
      ++s.n_plus;
    else
      ++s.n_minus;
  }
  return s;
}

template <typename Scalar>
Signature definiteness(const MetricResult<Scalar>& metric) {
  return definiteness(metric.g);
}

}  // namespace infogeo
