#pragma once

// Massive Klein-Gordon scalar field with the separable exponential
// solution phi(x) = A exp(-c sum_mu |x^mu - center^mu|), c = m / sqrt(D - 2).
//
// The solution is continuous but not differentiable on the union of
// hyperplanes {x^mu = center^mu}, not only at the single point x = center.
// Everything here treats that whole union as the kink set.

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "infogeo/errors.hpp"
#include "infogeo/quadrature.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

/// Amplitude that makes -L(x) a normalized density on R^D:
/// A = m^{(D-2)/2} / (D-2)^{D/4}.
template <typename Scalar = double>
Scalar normalization_constant(int dim, Scalar mass) {
  if (dim <= 2) {
    std::ostringstream msg;
    msg << "no massive exponential Klein-Gordon solution exists for D = " << dim << " (requires D >= 3)";
    throw DomainError(msg.str());
  }
  if (!(mass > 0)) throw DomainError("Klein-Gordon mass must be positive");
  const Scalar d2 = static_cast<Scalar>(dim - 2);
  return std::pow(mass, d2 / 2) / std::pow(d2, static_cast<Scalar>(dim) / 4);
}

/// Diagonal Minkowski metric diag(+1, -1, ..., -1); raised and lowered
/// components coincide.
class MinkowskiMetric {
 public:
  explicit MinkowskiMetric(int dim) : dim_(dim) {
    if (dim < 1) throw ArgumentError("Minkowski metric needs D >= 1");
  }

  int dim() const { return dim_; }

  template <typename Scalar = double>
  Scalar operator()(int mu, int nu) const {
    if (mu != nu) return Scalar(0);
    return mu == 0 ? Scalar(1) : Scalar(-1);
  }

  template <typename Scalar = double>
  Vector<Scalar> diagonal() const {
    Vector<Scalar> d = Vector<Scalar>::Constant(dim_, Scalar(-1));
    d(0) = Scalar(1);
    return d;
  }

 private:
  int dim_;
};

template <typename Scalar = double>
struct KleinGordonSolution {
  int dim = 3;
  Scalar mass = 1;
  Scalar amplitude = 1;
  Vector<Scalar> center;

  /// Solution with the amplitude fixed by normalization.
  static KleinGordonSolution normalized(int dim, Scalar mass, Vector<Scalar> center) {
    const Scalar a = normalization_constant(dim, mass);
    if (center.size() != dim) throw ArgumentError("center must have length D");
    return {dim, mass, a, std::move(center)};
  }

  static KleinGordonSolution normalized(int dim, Scalar mass) {
    return normalized(dim, mass, Vector<Scalar>::Zero(dim));
  }

  /// Per-axis decay rate c = m / sqrt(D - 2).
  Scalar decay_rate() const { return mass / std::sqrt(static_cast<Scalar>(dim - 2)); }

  MinkowskiMetric eta() const { return MinkowskiMetric(dim); }
};

namespace detail {

template <typename Scalar, typename Derived>
void check_point(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != sol.dim) throw ArgumentError("point must have length D");
  if (sol.center.size() != sol.dim) throw ArgumentError("solution center must have length D");
}

}  // namespace detail

template <typename Scalar, typename Derived>
Scalar field_value(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x) {
  detail::check_point(sol, x);
  const Scalar l1 = (x.template cast<Scalar>() - sol.center).cwiseAbs().sum();
  return sol.amplitude * std::exp(-sol.decay_rate() * l1);
}

/// Analytic gradient d_mu phi = -c sgn(x^mu - center^mu) phi, with sgn(0) = 0.
template <typename Scalar, typename Derived>
Vector<Scalar> field_gradient(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x) {
  const Scalar phi = field_value(sol, x);
  const Scalar c = sol.decay_rate();
  Vector<Scalar> grad(sol.dim);
  for (int mu = 0; mu < sol.dim; ++mu)
    grad(mu) = -c * sgn(static_cast<Scalar>(x(mu)) - sol.center(mu)) * phi;
  return grad;
}

/// eta^{mu nu} d_mu phi d_nu phi.
template <typename Scalar, typename Derived>
Scalar kinetic_term(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x) {
  const Vector<Scalar> grad = field_gradient(sol, x);
  return grad.cwiseProduct(grad).dot(sol.eta().template diagonal<Scalar>());
}

/// L = (eta^{mu nu} d_mu phi d_nu phi - m^2 phi^2) / 2. Equals -m^2 phi^2
/// away from the kink set.
template <typename Scalar, typename Derived>
Scalar lagrangian_density(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x) {
  const Scalar phi = field_value(sol, x);
  return (kinetic_term(sol, x) - sol.mass * sol.mass * phi * phi) / 2;
}

/// Central-difference evaluation of (box + m^2) phi at x, box = eta^{mu nu} d_mu d_nu.
/// The stencil must stay clear of the kink set: every |x^mu - center^mu| > 2h.
template <typename Scalar, typename Derived>
Scalar eom_residual(const KleinGordonSolution<Scalar>& sol, const Eigen::MatrixBase<Derived>& x, Scalar h) {
  detail::check_point(sol, x);
  if (!(h > 0) || h > Scalar(0.01)) throw ArgumentError("finite-difference step must satisfy 0 < h <= 0.01");
  for (int mu = 0; mu < sol.dim; ++mu) {
    if (!(std::abs(static_cast<Scalar>(x(mu)) - sol.center(mu)) > 2 * h)) {
      std::ostringstream msg;
      msg << "point lies within 2h of the kink hyperplane x^" << mu << " = " << sol.center(mu);
      throw PreconditionError(msg.str());
    }
  }
  Vector<Scalar> p = x.template cast<Scalar>();
  const Scalar phi0 = field_value(sol, p);
  const auto eta = sol.eta();
  Scalar box = 0;
  for (int mu = 0; mu < sol.dim; ++mu) {
    const Scalar x0 = p(mu);
    p(mu) = x0 + h;
    const Scalar fwd = field_value(sol, p);
    p(mu) = x0 - h;
    const Scalar bwd = field_value(sol, p);
    p(mu) = x0;
    box += eta.template operator()<Scalar>(mu, mu) * (fwd - 2 * phi0 + bwd) / (h * h);
  }
  return box + sol.mass * sol.mass * phi0;
}

enum class ActionRoute { separable, tensor };

/// S = integral of L over R^D.
///
/// The separable route uses L = -m^2 A^2 prod_mu exp(-2c |x^mu - center^mu|)
/// off the kink set; the tensor route integrates lagrangian_density directly
/// (D <= 5).
template <typename Scalar = double>
IntegralEstimate<Scalar> onshell_action(const KleinGordonSolution<Scalar>& sol, QuadratureSpec<Scalar> spec = {},
                                        ActionRoute route = ActionRoute::separable) {
  const Scalar c = sol.decay_rate();
  if (spec.split_points.empty())
    for (int mu = 0; mu < sol.dim; ++mu) spec.split_points.push_back({sol.center(mu)});
  if (spec.scales.empty()) spec.scales.assign(static_cast<std::size_t>(sol.dim), Scalar(4) / c);

  if (route == ActionRoute::tensor) {
    return integrate_rd_tensor<Scalar>(
        [&](const Vector<Scalar>& x) { return lagrangian_density(sol, x); }, sol.dim, spec);
  }
  std::vector<std::function<Scalar(Scalar)>> factors;
  for (int mu = 0; mu < sol.dim; ++mu) {
    const Scalar x0 = sol.center(mu);
    factors.emplace_back([c, x0](Scalar t) { return std::exp(-2 * c * std::abs(t - x0)); });
  }
  auto est = integrate_rd_separable<Scalar>(factors, spec);
  const Scalar prefactor = -sol.mass * sol.mass * sol.amplitude * sol.amplitude;
  est.value *= prefactor;
  est.error_estimate *= std::abs(prefactor);
  return est;
}

}  // namespace infogeo
