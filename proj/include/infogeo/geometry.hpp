#pragma once

// Curvature diagnostics for a metric sampled on a regular lattice in
// parameter space. All derivatives are second-order central differences, so
// Christoffel symbols need one layer of neighbors and the Riemann tensor two.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include "infogeo/errors.hpp"
#include "infogeo/metric.hpp"
#include "infogeo/signature.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

/// Regular lattice: `count[a]` points from `lower[a]` to `upper[a]` inclusive.
template <typename Scalar = double>
struct Lattice {
  Vector<Scalar> lower;
  Vector<Scalar> upper;
  std::vector<int> count;

  int dim() const { return static_cast<int>(count.size()); }

  Scalar spacing(int axis) const {
    return (upper(axis) - lower(axis)) / static_cast<Scalar>(count[static_cast<std::size_t>(axis)] - 1);
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int c : count) n *= static_cast<std::size_t>(c);
    return n;
  }

  std::size_t flat(const std::vector<int>& index) const {
    std::size_t k = 0;
    for (int a = 0; a < dim(); ++a) k = k * static_cast<std::size_t>(count[static_cast<std::size_t>(a)]) + static_cast<std::size_t>(index[static_cast<std::size_t>(a)]);
    return k;
  }

  std::vector<int> unflat(std::size_t k) const {
    std::vector<int> index(count.size());
    for (int a = dim() - 1; a >= 0; --a) {
      index[static_cast<std::size_t>(a)] = static_cast<int>(k % static_cast<std::size_t>(count[static_cast<std::size_t>(a)]));
      k /= static_cast<std::size_t>(count[static_cast<std::size_t>(a)]);
    }
    return index;
  }

  Vector<Scalar> point(const std::vector<int>& index) const {
    Vector<Scalar> p(dim());
    for (int a = 0; a < dim(); ++a) p(a) = lower(a) + spacing(a) * index[static_cast<std::size_t>(a)];
    return p;
  }

  void validate(int min_count = 2) const {
    if (lower.size() != dim() || upper.size() != dim()) throw ArgumentError("lattice bounds must match its dimension");
    for (int a = 0; a < dim(); ++a) {
      if (count[static_cast<std::size_t>(a)] < min_count) {
        std::ostringstream msg;
        msg << "lattice needs at least " << min_count << " points per axis";
        throw ArgumentError(msg.str());
      }
      if (!(upper(a) > lower(a))) throw ArgumentError("lattice upper bound must exceed lower bound");
    }
  }
};

/// Lattice centered on `center` with `count` points per axis and spacing `h`.
template <typename Scalar>
Lattice<Scalar> centered_lattice(const Vector<Scalar>& center, Scalar h, int count) {
  Lattice<Scalar> l;
  const Scalar half = h * static_cast<Scalar>(count - 1) / 2;
  l.lower = center.array() - half;
  l.upper = center.array() + half;
  l.count.assign(static_cast<std::size_t>(center.size()), count);
  return l;
}

template <typename Scalar = double>
struct MetricField {
  Lattice<Scalar> lattice;
  std::vector<MetricResult<Scalar>> values;

  const Matrix<Scalar>& g(const std::vector<int>& index) const { return values[lattice.flat(index)].g; }
};

/// Evaluates `provider(theta)` at every lattice point.
template <typename Scalar, typename Provider>
MetricField<Scalar> sample_metric_field(const Lattice<Scalar>& lattice, const Provider& provider) {
  lattice.validate();
  MetricField<Scalar> field{lattice, {}};
  field.values.reserve(lattice.size());
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    const Vector<Scalar> theta = lattice.point(lattice.unflat(k));
    if constexpr (std::is_convertible_v<decltype(provider(theta)), MetricResult<Scalar>>) {
      field.values.push_back(provider(theta));
    } else {
      field.values.push_back(MetricResult<Scalar>::from_matrix(provider(theta)));
    }
    if (field.values.back().g.rows() != lattice.dim()) throw ArgumentError("metric size must match lattice dimension");
  }
  return field;
}

/// Round 2-sphere, g = diag(1, sin^2 theta^0).
template <typename Scalar>
MetricField<Scalar> round_sphere_field(const Lattice<Scalar>& lattice) {
  if (lattice.dim() != 2) throw ArgumentError("sphere fixture is two-dimensional");
  return sample_metric_field(lattice, [](const Vector<Scalar>& t) {
    Matrix<Scalar> g = Matrix<Scalar>::Zero(2, 2);
    g(0, 0) = 1;
    g(1, 1) = std::sin(t(0)) * std::sin(t(0));
    return g;
  });
}

/// Euclidean plane in polar-like coordinates, g = diag(1, (theta^0)^2).
template <typename Scalar>
MetricField<Scalar> polar_plane_field(const Lattice<Scalar>& lattice) {
  if (lattice.dim() != 2) throw ArgumentError("polar fixture is two-dimensional");
  return sample_metric_field(lattice, [](const Vector<Scalar>& t) {
    Matrix<Scalar> g = Matrix<Scalar>::Zero(2, 2);
    g(0, 0) = 1;
    g(1, 1) = t(0) * t(0);
    return g;
  });
}

/// Gamma^a_bc stored as upper[a](b, c).
template <typename Scalar = double>
struct Christoffel {
  std::vector<Matrix<Scalar>> upper;

  Scalar operator()(int a, int b, int c) const { return upper[static_cast<std::size_t>(a)](b, c); }
  Scalar max_abs() const {
    Scalar m = 0;
    for (const auto& u : upper) m = std::max(m, u.cwiseAbs().maxCoeff());
    return m;
  }
};

/// R^a_bcd, flat row-major storage.
template <typename Scalar = double>
struct RiemannTensor {
  int n = 0;
  std::vector<Scalar> data;

  Scalar& operator()(int a, int b, int c, int d) { return data[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)]; }
  Scalar operator()(int a, int b, int c, int d) const {
    return data[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)];
  }
  Scalar max_abs() const {
    Scalar m = 0;
    for (Scalar v : data) m = std::max(m, std::abs(v));
    return m;
  }
};

namespace detail {

template <typename Scalar>
void require_interior(const Lattice<Scalar>& lattice, const std::vector<int>& index, int depth) {
  if (static_cast<int>(index.size()) != lattice.dim()) throw ArgumentError("lattice index has the wrong length");
  for (int a = 0; a < lattice.dim(); ++a) {
    const int i = index[static_cast<std::size_t>(a)];
    if (i < depth || i >= lattice.count[static_cast<std::size_t>(a)] - depth) {
      std::ostringstream msg;
      msg << "lattice point is not " << depth << " layer(s) inside the boundary on axis " << a;
      throw ArgumentError(msg.str());
    }
  }
}

template <typename Scalar>
Matrix<Scalar> inverse_metric(const Matrix<Scalar>& g) {
  Eigen::FullPivLU<Matrix<Scalar>> lu(g);
  lu.setThreshold(Scalar(1e-12));
  if (!lu.isInvertible()) throw InversionError("metric is singular at this lattice point");
  return lu.inverse();
}

template <typename Scalar>
Christoffel<Scalar> christoffel_unchecked(const MetricField<Scalar>& field, const std::vector<int>& index) {
  const auto& lat = field.lattice;
  const int n = lat.dim();
  // dg[k] = d g / d theta^k
  std::vector<Matrix<Scalar>> dg;
  std::vector<int> probe = index;
  for (int k = 0; k < n; ++k) {
    probe[static_cast<std::size_t>(k)] = index[static_cast<std::size_t>(k)] + 1;
    const Matrix<Scalar> fwd = field.g(probe);
    probe[static_cast<std::size_t>(k)] = index[static_cast<std::size_t>(k)] - 1;
    const Matrix<Scalar> bwd = field.g(probe);
    probe[static_cast<std::size_t>(k)] = index[static_cast<std::size_t>(k)];
    dg.push_back((fwd - bwd) / (2 * lat.spacing(k)));
  }
  const Matrix<Scalar> ginv = inverse_metric(field.g(index));
  Christoffel<Scalar> gamma;
  gamma.upper.assign(static_cast<std::size_t>(n), Matrix<Scalar>::Zero(n, n));
  for (int b = 0; b < n; ++b) {
    for (int c = b; c < n; ++c) {
      // lowered[d] = (d_b g_dc + d_c g_db - d_d g_bc) / 2
      Vector<Scalar> lowered(n);
      for (int d = 0; d < n; ++d)
        lowered(d) = (dg[static_cast<std::size_t>(b)](d, c) + dg[static_cast<std::size_t>(c)](d, b) -
                      dg[static_cast<std::size_t>(d)](b, c)) / 2;
      const Vector<Scalar> raised = ginv * lowered;
      for (int a = 0; a < n; ++a) {
        gamma.upper[static_cast<std::size_t>(a)](b, c) = raised(a);
        gamma.upper[static_cast<std::size_t>(a)](c, b) = raised(a);
      }
    }
  }
  return gamma;
}

}  // namespace detail

/// Gamma^a_bc = g^ad (d_b g_dc + d_c g_db - d_d g_bc) / 2 at an interior point.
template <typename Scalar>
Christoffel<Scalar> christoffel(const MetricField<Scalar>& field, const std::vector<int>& index) {
  detail::require_interior(field.lattice, index, 1);
  return detail::christoffel_unchecked(field, index);
}

/// R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb,
/// at a point two layers inside the lattice.
template <typename Scalar>
RiemannTensor<Scalar> riemann(const MetricField<Scalar>& field, const std::vector<int>& index) {
  const auto& lat = field.lattice;
  detail::require_interior(lat, index, 2);
  const int n = lat.dim();
  const auto gamma = detail::christoffel_unchecked(field, index);

  // dgamma[c].upper[a](d, b) = d_c Gamma^a_db
  std::vector<Christoffel<Scalar>> dgamma;
  std::vector<int> probe = index;
  for (int c = 0; c < n; ++c) {
    probe[static_cast<std::size_t>(c)] = index[static_cast<std::size_t>(c)] + 1;
    const auto fwd = detail::christoffel_unchecked(field, probe);
    probe[static_cast<std::size_t>(c)] = index[static_cast<std::size_t>(c)] - 1;
    const auto bwd = detail::christoffel_unchecked(field, probe);
    probe[static_cast<std::size_t>(c)] = index[static_cast<std::size_t>(c)];
    Christoffel<Scalar> d;
    for (int a = 0; a < n; ++a)
      d.upper.push_back((fwd.upper[static_cast<std::size_t>(a)] - bwd.upper[static_cast<std::size_t>(a)]) /
                        (2 * lat.spacing(c)));
    dgamma.push_back(std::move(d));
  }

  // half(a, b, c, d) = d_c Gamma^a_db + Gamma^a_ce Gamma^e_db; R is its antisymmetric part in (c, d).
  RiemannTensor<Scalar> half{n, std::vector<Scalar>(static_cast<std::size_t>(n * n * n * n), 0)};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          Scalar v = dgamma[static_cast<std::size_t>(c)](a, d, b);
          for (int e = 0; e < n; ++e) v += gamma(a, c, e) * gamma(e, d, b);
          half(a, b, c, d) = v;
        }
  RiemannTensor<Scalar> r{n, std::vector<Scalar>(half.data.size(), 0)};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) r(a, b, c, d) = half(a, b, c, d) - half(a, b, d, c);
  return r;
}

enum class FlatnessVerdict { flat_within_tol, not_flat };

template <typename Scalar = double>
struct CurvatureReport {
  Scalar max_abs_christoffel = 0;
  Scalar max_abs_riemann = 0;
  int eval_points = 0;
  FlatnessVerdict verdict = FlatnessVerdict::not_flat;
};

/// Default tolerance for curvature of a quadrature-sourced field. Second
/// differences divide metric noise by spacing^2, so the tolerance is
/// max(1e-3, 10 * metric_error / spacing^2).
template <typename Scalar>
Scalar quadrature_curvature_tolerance(Scalar metric_error, Scalar spacing) {
  return std::max(Scalar(1e-3), 10 * metric_error / (spacing * spacing));
}

/// Maximum |Gamma| and |R| over every point two layers inside the lattice.
/// Requires at least 5 points per axis.
template <typename Scalar>
CurvatureReport<Scalar> flatness_report(const MetricField<Scalar>& field, Scalar tol) {
  const auto& lat = field.lattice;
  lat.validate(5);
  CurvatureReport<Scalar> report;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const auto index = lat.unflat(k);
    bool interior = true;
    for (int a = 0; a < lat.dim(); ++a) {
      const int i = index[static_cast<std::size_t>(a)];
      interior = interior && i >= 2 && i < lat.count[static_cast<std::size_t>(a)] - 2;
    }
    if (!interior) continue;
    report.max_abs_christoffel = std::max(report.max_abs_christoffel, christoffel(field, index).max_abs());
    report.max_abs_riemann = std::max(report.max_abs_riemann, riemann(field, index).max_abs());
    ++report.eval_points;
  }
  report.verdict = report.max_abs_christoffel <= tol && report.max_abs_riemann <= tol ? FlatnessVerdict::flat_within_tol
                                                                                      : FlatnessVerdict::not_flat;
  return report;
}

}  // namespace infogeo
