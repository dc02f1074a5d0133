#pragma once

// Location families P(x; theta) = P(x - theta) on R^D: the on-shell
// Klein-Gordon density, an isotropic Gaussian and a product of Laplace
// densities with independent per-axis rates. All three factor over axes.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "infogeo/errors.hpp"
#include "infogeo/field_theory.hpp"
#include "infogeo/kinds.hpp"
#include "infogeo/metric.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

namespace detail {

/// Inverse of the standard normal CDF: rational approximation followed by
/// Halley refinement against erfc.
template <typename Scalar>
Scalar inverse_normal_cdf(Scalar p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  const double pd = static_cast<double>(p);
  const double p_low = 0.02425;
  double x;
  if (pd < p_low) {
    const double q = std::sqrt(-2 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (pd <= 1 - p_low) {
    const double q = pd - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  Scalar z = static_cast<Scalar>(x);
  const Scalar sqrt2 = std::numbers::sqrt2_v<Scalar>;
  const Scalar sqrt2pi = std::sqrt(2 * std::numbers::pi_v<Scalar>);
  for (int i = 0; i < 2; ++i) {
    const Scalar e = std::erfc(-z / sqrt2) / 2 - p;
    const Scalar u = e * sqrt2pi * std::exp(z * z / 2);
    z = z - u / (1 + z * u / 2);
  }
  return z;
}

}  // namespace detail

/// One-dimensional location factor of a product family.
template <typename Scalar = double>
struct MarginalFactor {
  enum class Shape {
    laplace,   ///< (rate / 2) exp(-rate |t - location|)
    gaussian,  ///< exp(-(t - location)^2) / sqrt(pi)
  };

  Shape shape = Shape::laplace;
  Scalar location = 0;
  Scalar rate = 1;

  Scalar log_density(Scalar t) const {
    const Scalar z = t - location;
    if (shape == Shape::laplace) return std::log(rate / 2) - rate * std::abs(z);
    return -z * z - std::log(std::numbers::pi_v<Scalar>) / 2;
  }

  Scalar density(Scalar t) const { return std::exp(log_density(t)); }

  /// Derivative of the log-density with respect to the location, sgn(0) = 0.
  Scalar score(Scalar t) const {
    const Scalar z = t - location;
    return shape == Shape::laplace ? rate * sgn(z) : 2 * z;
  }

  Scalar cdf(Scalar t) const {
    const Scalar z = t - location;
    if (shape == Shape::gaussian) return std::erfc(-z) / 2;
    return z < 0 ? std::exp(rate * z) / 2 : 1 - std::exp(-rate * z) / 2;
  }

  Scalar inverse_cdf(Scalar u) const {
    if (!(u > 0 && u < 1)) throw ArgumentError("inverse CDF argument must lie in (0, 1)");
    if (shape == Shape::gaussian)
      return location + detail::inverse_normal_cdf(u) / std::numbers::sqrt2_v<Scalar>;
    const Scalar v = u - Scalar(0.5);
    return location - sgn(v) * std::log1p(-2 * std::abs(v)) / rate;
  }

  /// Length scale used for compactifying this factor's axis.
  Scalar length_scale() const { return shape == Shape::laplace ? 8 / rate : Scalar(3); }
};

template <typename Scalar = double>
struct ProductStructure {
  std::vector<MarginalFactor<Scalar>> factors;
};

template <typename Scalar = double>
class Family {
 public:
  /// -L on the normalized Klein-Gordon solution. Requires D >= 3 and m > 0.
  static Family klein_gordon(int dim, Scalar mass, Vector<Scalar> theta) {
    const Scalar a = normalization_constant(dim, mass);
    check_theta(dim, theta);
    Family f(FamilyKind::KleinGordonOnShell, dim, std::move(theta));
    f.mass_ = mass;
    const Scalar rate = 2 * mass / std::sqrt(static_cast<Scalar>(dim - 2));
    f.rates_ = Vector<Scalar>::Constant(dim, rate);
    f.log_peak_ = std::log(a * a * mass * mass);
    return f;
  }
  static Family klein_gordon(int dim, Scalar mass) { return klein_gordon(dim, mass, Vector<Scalar>::Zero(dim)); }

  static Family gaussian(int dim, Vector<Scalar> theta) {
    if (dim < 1) throw ArgumentError("dimension must be positive");
    check_theta(dim, theta);
    Family f(FamilyKind::IsotropicGaussian, dim, std::move(theta));
    f.log_peak_ = -static_cast<Scalar>(dim) * std::log(std::numbers::pi_v<Scalar>) / 2;
    return f;
  }
  static Family gaussian(int dim) { return gaussian(dim, Vector<Scalar>::Zero(dim)); }

  /// prod_a (rate_a / 2) exp(-rate_a |x^a - theta^a|).
  static Family laplace_product(Vector<Scalar> rates, Vector<Scalar> theta) {
    const int dim = static_cast<int>(rates.size());
    if (dim < 1) throw ArgumentError("dimension must be positive");
    for (Eigen::Index i = 0; i < rates.size(); ++i)
      if (!(rates(i) > 0)) throw DomainError("Laplace rates must be positive");
    check_theta(dim, theta);
    Family f(FamilyKind::LaplaceProduct, dim, std::move(theta));
    f.log_peak_ = (rates.array() / 2).log().sum();
    f.rates_ = std::move(rates);
    return f;
  }

  FamilyKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int param_dim() const { return dim_; }
  const Vector<Scalar>& theta() const { return theta_; }
  std::optional<Scalar> mass() const { return mass_; }
  /// Per-axis exponential rates (Klein-Gordon: all 2m / sqrt(D - 2)); empty for the Gaussian.
  const Vector<Scalar>& rates() const { return rates_; }
  /// log P at x = theta.
  Scalar log_peak() const { return log_peak_; }

  Family with_theta(Vector<Scalar> theta) const {
    check_theta(dim_, theta);
    Family f = *this;
    f.theta_ = std::move(theta);
    return f;
  }

  std::optional<ProductStructure<Scalar>> product_structure() const {
    using Shape = typename MarginalFactor<Scalar>::Shape;
    ProductStructure<Scalar> ps;
    for (int a = 0; a < dim_; ++a) {
      if (kind_ == FamilyKind::IsotropicGaussian)
        ps.factors.push_back({Shape::gaussian, theta_(a), Scalar(1)});
      else
        ps.factors.push_back({Shape::laplace, theta_(a), rates_(a)});
    }
    return ps;
  }

 private:
  Family(FamilyKind kind, int dim, Vector<Scalar> theta) : kind_(kind), dim_(dim), theta_(std::move(theta)) {}

  static void check_theta(int dim, const Vector<Scalar>& theta) {
    if (theta.size() != dim) {
      std::ostringstream msg;
      msg << "theta has length " << theta.size() << ", expected " << dim;
      throw ArgumentError(msg.str());
    }
  }

  FamilyKind kind_;
  int dim_;
  Vector<Scalar> theta_;
  std::optional<Scalar> mass_;
  Vector<Scalar> rates_;
  Scalar log_peak_ = 0;
};

using Familyd = Family<double>;

namespace detail {

template <typename Scalar, typename Derived>
void check_dim(const Family<Scalar>& family, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != family.dim()) {
    std::ostringstream msg;
    msg << "point has length " << x.size() << ", expected " << family.dim();
    throw ArgumentError(msg.str());
  }
}

}  // namespace detail

template <typename Scalar, typename Derived>
Scalar log_density(const Family<Scalar>& family, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dim(family, x);
  const auto z = (x.template cast<Scalar>() - family.theta()).eval();
  if (family.kind() == FamilyKind::IsotropicGaussian) return family.log_peak() - z.squaredNorm();
  return family.log_peak() - family.rates().cwiseProduct(z.cwiseAbs()).sum();
}

template <typename Scalar, typename Derived>
Scalar density(const Family<Scalar>& family, const Eigen::MatrixBase<Derived>& x) {
  return std::exp(log_density(family, x));
}

/// Gradient of ln P with respect to theta.
template <typename Scalar, typename Derived>
Vector<Scalar> score(const Family<Scalar>& family, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dim(family, x);
  const Vector<Scalar> z = x.template cast<Scalar>() - family.theta();
  if (family.kind() == FamilyKind::IsotropicGaussian) return 2 * z;
  Vector<Scalar> s(family.dim());
  for (int a = 0; a < family.dim(); ++a) s(a) = family.rates()(a) * sgn(z(a));
  return s;
}

template <typename Scalar>
MarginalFactor<Scalar> marginal_factor(const Family<Scalar>& family, int axis) {
  if (axis < 0 || axis >= family.dim()) throw ArgumentError("axis out of range");
  const auto ps = family.product_structure();
  if (!ps) throw CapabilityError("family has no product structure");
  return ps->factors[static_cast<std::size_t>(axis)];
}

template <typename Scalar>
Scalar marginal_inverse_cdf(const Family<Scalar>& family, int axis, Scalar u) {
  return marginal_factor(family, axis).inverse_cdf(u);
}

template <typename Scalar>
Scalar marginal_cdf(const Family<Scalar>& family, int axis, Scalar t) {
  return marginal_factor(family, axis).cdf(t);
}

template <typename Scalar>
MetricMeta<Scalar> metric_meta(const Family<Scalar>& family) {
  return {family.kind(), family.dim(), family.mass(), family.theta()};
}

/// Closed-form Fisher metric: 4 m^2 / (D - 2) delta for Klein-Gordon,
/// 2 delta for the Gaussian, diag(rate_a^2) for the Laplace product.
template <typename Scalar>
std::optional<MetricResult<Scalar>> analytic_metric(const Family<Scalar>& family) {
  const int n = family.param_dim();
  Matrix<Scalar> g;
  switch (family.kind()) {
    case FamilyKind::KleinGordonOnShell: {
      const Scalar m = *family.mass();
      g = Matrix<Scalar>::Identity(n, n) * (4 * m * m / static_cast<Scalar>(family.dim() - 2));
      break;
    }
    case FamilyKind::IsotropicGaussian: g = Matrix<Scalar>::Identity(n, n) * Scalar(2); break;
    case FamilyKind::LaplaceProduct: g = family.rates().array().square().matrix().asDiagonal(); break;
  }
  auto r = MetricResult<Scalar>::from_matrix(std::move(g), MetricMethod::analytic);
  r.meta = metric_meta(family);
  return r;
}

}  // namespace infogeo
