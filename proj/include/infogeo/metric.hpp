#pragma once

#include <cstdint>
#include <optional>

#include "infogeo/kinds.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

/// Where a metric came from.
template <typename Scalar = double>
struct MetricMeta {
  FamilyKind kind = FamilyKind::KleinGordonOnShell;
  int dim = 0;
  std::optional<Scalar> mass;
  Vector<Scalar> theta;
};

/// A symmetric N x N metric with per-entry error estimates.
template <typename Scalar = double>
struct MetricResult {
  Matrix<Scalar> g;
  MetricMethod method = MetricMethod::analytic;
  Matrix<Scalar> error;  ///< zeros for analytic results
  std::optional<MetricMeta<Scalar>> meta;
  bool unconverged = false;
  std::optional<std::uint64_t> seed;

  Eigen::Index size() const { return g.rows(); }

  /// Builds a result from a raw matrix with zero error.
  static MetricResult from_matrix(Matrix<Scalar> m, MetricMethod method = MetricMethod::analytic) {
    MetricResult r;
    r.error = Matrix<Scalar>::Zero(m.rows(), m.cols());
    r.g = std::move(m);
    r.method = method;
    return r;
  }
};

}  // namespace infogeo
