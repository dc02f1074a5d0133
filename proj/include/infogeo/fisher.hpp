#pragma once

// Fisher-Rao metric g_ab = E[d_a ln P d_b ln P] by four routes (closed form,
// deterministic quadrature, Monte Carlo, finite-difference scores), moments
// E[f] and V[f], and the metric post-processing used downstream: shift
// invariance, Rao distance, coordinate normalization and Wick rotation.

#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "infogeo/errors.hpp"
#include "infogeo/family.hpp"
#include "infogeo/metric.hpp"
#include "infogeo/montecarlo.hpp"
#include "infogeo/quadrature.hpp"
#include "infogeo/signature.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

enum class QuadratureRoute {
  automatic,  ///< separable when the family factors over axes, tensor otherwise
  separable,
  tensor,
};

/// Raised when some metric entries failed to converge. Holds the metric
/// assembled from best estimates, flagged unconverged.
template <typename Scalar = double>
class MetricConvergenceError : public ConvergenceError {
 public:
  MetricConvergenceError(const std::string& what, MetricResult<Scalar> partial)
      : ConvergenceError(what, 0.0, 0.0), partial_(std::move(partial)) {}
  const MetricResult<Scalar>& partial() const { return partial_; }

 private:
  MetricResult<Scalar> partial_;
};

/// Fills in kink split points at theta and per-axis compactification scales
/// from the family, leaving explicitly set fields alone.
template <typename Scalar>
QuadratureSpec<Scalar> family_quadrature_spec(const Family<Scalar>& family, QuadratureSpec<Scalar> spec = {}) {
  const auto ps = family.product_structure();
  if (spec.split_points.empty())
    for (int a = 0; a < family.dim(); ++a) spec.split_points.push_back({family.theta()(a)});
  if (spec.scales.empty()) {
    for (int a = 0; a < family.dim(); ++a)
      spec.scales.push_back(ps ? ps->factors[static_cast<std::size_t>(a)].length_scale() : Scalar(1));
  }
  return spec;
}

namespace detail {

template <typename Scalar>
bool use_separable(const Family<Scalar>& family, QuadratureRoute route) {
  if (route == QuadratureRoute::separable) {
    if (!family.product_structure()) throw CapabilityError("separable route requires a product structure");
    return true;
  }
  if (route == QuadratureRoute::tensor) return false;
  return family.product_structure().has_value();
}

/// Integrates each upper-triangular entry, collecting best estimates when an
/// entry fails to converge.
template <typename Scalar, typename EntryIntegral>
MetricResult<Scalar> assemble_metric(const Family<Scalar>& family, MetricMethod method, const EntryIntegral& entry) {
  const int n = family.param_dim();
  MetricResult<Scalar> r;
  r.g = Matrix<Scalar>::Zero(n, n);
  r.error = Matrix<Scalar>::Zero(n, n);
  r.method = method;
  r.meta = metric_meta(family);
  std::string first_failure;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      IntegralEstimate<Scalar> est;
      try {
        est = entry(a, b);
      } catch (const ConvergenceError& e) {
        est.value = static_cast<Scalar>(e.best_value());
        est.error_estimate = static_cast<Scalar>(e.best_error());
        r.unconverged = true;
        if (first_failure.empty()) first_failure = e.what();
      }
      r.g(a, b) = r.g(b, a) = est.value;
      r.error(a, b) = r.error(b, a) = est.error_estimate;
    }
  }
  if (r.unconverged) throw MetricConvergenceError<Scalar>("metric integration did not converge: " + first_failure, r);
  return r;
}

/// Per-axis factors of P * s_a * s_b for a product family, where `score_of`
/// gives the per-axis score function for an axis.
template <typename Scalar, typename AxisScore>
std::vector<std::function<Scalar(Scalar)>> metric_entry_factors(const ProductStructure<Scalar>& ps, int a, int b,
                                                                const AxisScore& score_of) {
  std::vector<std::function<Scalar(Scalar)>> factors;
  for (int i = 0; i < static_cast<int>(ps.factors.size()); ++i) {
    const auto factor = ps.factors[static_cast<std::size_t>(i)];
    const int power = (i == a) + (i == b);
    if (power == 0) {
      factors.emplace_back([factor](Scalar t) { return factor.density(t); });
    } else {
      auto s = score_of(i);
      factors.emplace_back([factor, s, power](Scalar t) {
        const Scalar v = s(t);
        return factor.density(t) * (power == 2 ? v * v : v);
      });
    }
  }
  return factors;
}

}  // namespace detail

/// Closed-form route.
template <typename Scalar>
MetricResult<Scalar> fisher_metric_analytic(const Family<Scalar>& family) {
  auto r = analytic_metric(family);
  if (!r) throw CapabilityError("no closed-form metric for this family");
  return *r;
}

/// Quadrature route: g_ab = integral of d_aP d_bP / P, evaluated at the
/// family's own theta with kink splits there.
template <typename Scalar>
MetricResult<Scalar> fisher_metric_quadrature(const Family<Scalar>& family, const QuadratureSpec<Scalar>& base = {},
                                              QuadratureRoute route = QuadratureRoute::automatic) {
  const auto spec = family_quadrature_spec(family, base);
  if (detail::use_separable(family, route)) {
    const auto ps = *family.product_structure();
    auto score_of = [&ps](int i) {
      const auto f = ps.factors[static_cast<std::size_t>(i)];
      return [f](Scalar t) { return f.score(t); };
    };
    return detail::assemble_metric(family, MetricMethod::quadrature, [&](int a, int b) {
      return integrate_rd_separable<Scalar>(detail::metric_entry_factors(ps, a, b, score_of), spec);
    });
  }
  return detail::assemble_metric(family, MetricMethod::quadrature, [&](int a, int b) {
    return integrate_rd_tensor<Scalar>(
        [&](const Vector<Scalar>& x) {
          const Vector<Scalar> s = score(family, x);
          return density(family, x) * s(a) * s(b);
        },
        family.dim(), spec);
  });
}

/// Monte Carlo route: sample mean of s_a s_b with per-entry standard errors.
template <typename Scalar>
MetricResult<Scalar> fisher_metric_montecarlo(const Family<Scalar>& family, const MonteCarloSpec& spec) {
  const auto ps = family.product_structure();
  if (!ps) throw CapabilityError("Monte Carlo metric requires a product structure");
  const int n = family.param_dim();
  const Eigen::Index outputs = n * (n + 1) / 2;
  const auto est = mc_expectation_vector<Scalar>(
      *ps,
      [&](const Vector<Scalar>& x) {
        const Vector<Scalar> s = score(family, x);
        Vector<Scalar> v(outputs);
        Eigen::Index k = 0;
        for (int a = 0; a < n; ++a)
          for (int b = a; b < n; ++b) v(k++) = s(a) * s(b);
        return v;
      },
      outputs, spec);
  MetricResult<Scalar> r;
  r.g = Matrix<Scalar>::Zero(n, n);
  r.error = Matrix<Scalar>::Zero(n, n);
  Eigen::Index k = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b, ++k) {
      r.g(a, b) = r.g(b, a) = est.value(k);
      r.error(a, b) = r.error(b, a) = est.standard_error(k);
    }
  }
  r.method = MetricMethod::montecarlo;
  r.meta = metric_meta(family);
  r.seed = spec.seed;
  return r;
}

/// Quadrature of P * s_a * s_b with scores replaced by central differences
/// of ln P in theta with step h.
///
/// For the Laplace-type families ln P is piecewise linear in theta, so the
/// difference quotient is exact except inside the band |x^a - theta^a| < h,
/// which biases g by O(h). The band edges are added as split points and one
/// Richardson step over (h, h/2) removes the O(h) term; a second step over
/// (h/2, h/4) provides the error estimate.
template <typename Scalar>
MetricResult<Scalar> fisher_metric_fd_score(const Family<Scalar>& family, Scalar h,
                                            const QuadratureSpec<Scalar>& base = {},
                                            QuadratureRoute route = QuadratureRoute::automatic) {
  if (!(h >= Scalar(1e-6) && h <= Scalar(1e-2))) throw ArgumentError("finite-difference step must lie in [1e-6, 1e-2]");
  const bool separable = detail::use_separable(family, route);
  const int n = family.param_dim();

  auto at_step = [&](Scalar step) {
    QuadratureSpec<Scalar> spec = base;
    if (spec.split_points.empty()) {
      for (int a = 0; a < n; ++a) {
        const Scalar t = family.theta()(a);
        spec.split_points.push_back({t - step, t, t + step});
      }
    }
    spec = family_quadrature_spec(family, spec);

    if (separable) {
      const auto ps = *family.product_structure();
      auto score_of = [&ps, step](int i) {
        auto plus = ps.factors[static_cast<std::size_t>(i)], minus = plus;
        plus.location += step;
        minus.location -= step;
        return [plus, minus, step](Scalar t) { return (plus.log_density(t) - minus.log_density(t)) / (2 * step); };
      };
      return detail::assemble_metric(family, MetricMethod::finite_difference_score, [&](int a, int b) {
        return integrate_rd_separable<Scalar>(detail::metric_entry_factors(ps, a, b, score_of), spec);
      });
    }
    std::vector<Family<Scalar>> plus, minus;
    for (int a = 0; a < n; ++a) {
      Vector<Scalar> tp = family.theta(), tm = family.theta();
      tp(a) += step;
      tm(a) -= step;
      plus.push_back(family.with_theta(tp));
      minus.push_back(family.with_theta(tm));
    }
    auto fd = [&](int a, const Vector<Scalar>& x) {
      return (log_density(plus[static_cast<std::size_t>(a)], x) - log_density(minus[static_cast<std::size_t>(a)], x)) /
             (2 * step);
    };
    return detail::assemble_metric(family, MetricMethod::finite_difference_score, [&](int a, int b) {
      return integrate_rd_tensor<Scalar>(
          [&](const Vector<Scalar>& x) { return density(family, x) * fd(a, x) * fd(b, x); }, family.dim(), spec);
    });
  };

  const auto g1 = at_step(h);
  const auto g2 = at_step(h / 2);
  const auto g4 = at_step(h / 4);
  const Matrix<Scalar> coarse = 2 * g2.g - g1.g;
  const Matrix<Scalar> fine = 2 * g4.g - g2.g;

  MetricResult<Scalar> r;
  r.g = coarse;
  r.error = (coarse - fine).cwiseAbs() + 2 * g2.error + g1.error;
  r.method = MetricMethod::finite_difference_score;
  r.meta = metric_meta(family);
  return r;
}

/// Settings for the method dispatcher.
template <typename Scalar = double>
struct FisherSettings {
  QuadratureSpec<Scalar> quadrature;
  QuadratureRoute route = QuadratureRoute::automatic;
  MonteCarloSpec montecarlo;
  Scalar fd_step = Scalar(1e-3);
};

template <typename Scalar>
MetricResult<Scalar> fisher_metric(const Family<Scalar>& family, MetricMethod method,
                                   const FisherSettings<Scalar>& settings = {}) {
  switch (method) {
    case MetricMethod::analytic: return fisher_metric_analytic(family);
    case MetricMethod::quadrature: return fisher_metric_quadrature(family, settings.quadrature, settings.route);
    case MetricMethod::montecarlo: return fisher_metric_montecarlo(family, settings.montecarlo);
    case MetricMethod::finite_difference_score:
      return fisher_metric_fd_score(family, settings.fd_step, settings.quadrature, settings.route);
  }
  throw ArgumentError("unknown metric method");
}

// ---------------------------------------------------------------------------
// Moments

enum class MomentRoute { quadrature, montecarlo };

template <typename Scalar = double>
struct MomentSettings {
  MomentRoute route = MomentRoute::quadrature;
  QuadratureSpec<Scalar> quadrature;
  MonteCarloSpec montecarlo;
};

/// f(x) = prod_a factors[a](x^a); missing trailing factors are 1.
template <typename Scalar = double>
struct SeparableFunction {
  std::vector<std::function<Scalar(Scalar)>> factors;

  Scalar operator()(const Vector<Scalar>& x) const {
    Scalar v = 1;
    for (std::size_t a = 0; a < factors.size(); ++a)
      if (factors[a]) v *= factors[a](x(static_cast<Eigen::Index>(a)));
    return v;
  }

  SeparableFunction squared() const {
    SeparableFunction out;
    for (const auto& f : factors) {
      if (!f) {
        out.factors.emplace_back();
        continue;
      }
      out.factors.emplace_back([f](Scalar t) {
        const Scalar v = f(t);
        return v * v;
      });
    }
    return out;
  }
};

/// The coordinate function x^axis raised to `power`.
template <typename Scalar>
SeparableFunction<Scalar> coordinate_power(int dim, int axis, int power) {
  if (axis < 0 || axis >= dim) throw ArgumentError("axis out of range");
  SeparableFunction<Scalar> f;
  f.factors.resize(static_cast<std::size_t>(dim));
  f.factors[static_cast<std::size_t>(axis)] = [power](Scalar t) { return std::pow(t, power); };
  return f;
}

/// E[f] for a separable f: product of one-dimensional integrals against the
/// marginal factors, or a Monte Carlo sample mean.
template <typename Scalar>
IntegralEstimate<Scalar> expectation(const Family<Scalar>& family, const SeparableFunction<Scalar>& f,
                                     const MomentSettings<Scalar>& settings = {}) {
  if (static_cast<int>(f.factors.size()) > family.dim()) throw ArgumentError("more factors than dimensions");
  if (settings.route == MomentRoute::montecarlo) return mc_expectation(family, f, settings.montecarlo);
  const auto ps = family.product_structure();
  if (!ps) throw CapabilityError("separable expectation requires a product structure");
  const auto spec = family_quadrature_spec(family, settings.quadrature);
  std::vector<std::function<Scalar(Scalar)>> factors;
  for (int a = 0; a < family.dim(); ++a) {
    const auto pf = ps->factors[static_cast<std::size_t>(a)];
    std::function<Scalar(Scalar)> g;
    if (static_cast<std::size_t>(a) < f.factors.size()) g = f.factors[static_cast<std::size_t>(a)];
    if (g)
      factors.emplace_back([pf, g](Scalar t) { return g(t) * pf.density(t); });
    else
      factors.emplace_back([pf](Scalar t) { return pf.density(t); });
  }
  return integrate_rd_separable<Scalar>(factors, spec);
}

/// E[f] for a general f: tensor quadrature (D <= 5) or Monte Carlo.
template <typename Scalar>
IntegralEstimate<Scalar> expectation(const Family<Scalar>& family,
                                     const std::function<Scalar(const Vector<Scalar>&)>& f,
                                     const MomentSettings<Scalar>& settings = {}) {
  if (settings.route == MomentRoute::montecarlo) return mc_expectation(family, f, settings.montecarlo);
  const auto spec = family_quadrature_spec(family, settings.quadrature);
  return integrate_rd_tensor<Scalar>([&](const Vector<Scalar>& x) { return f(x) * density(family, x); },
                                     family.dim(), spec);
}

namespace detail {

template <typename Scalar>
IntegralEstimate<Scalar> variance_from(const IntegralEstimate<Scalar>& first, const IntegralEstimate<Scalar>& second) {
  IntegralEstimate<Scalar> v = second;
  v.value = std::max(Scalar(0), second.value - first.value * first.value);
  v.error_estimate = second.error_estimate + 2 * std::abs(first.value) * first.error_estimate;
  v.evaluations = first.evaluations + second.evaluations;
  return v;
}

}  // namespace detail

/// V[f] = E[f^2] - E[f]^2, clamped at zero.
template <typename Scalar>
IntegralEstimate<Scalar> variance(const Family<Scalar>& family, const SeparableFunction<Scalar>& f,
                                  const MomentSettings<Scalar>& settings = {}) {
  return detail::variance_from(expectation(family, f, settings), expectation(family, f.squared(), settings));
}

template <typename Scalar>
IntegralEstimate<Scalar> variance(const Family<Scalar>& family, const std::function<Scalar(const Vector<Scalar>&)>& f,
                                  const MomentSettings<Scalar>& settings = {}) {
  const std::function<Scalar(const Vector<Scalar>&)> f2 = [&f](const Vector<Scalar>& x) {
    const Scalar v = f(x);
    return v * v;
  };
  return detail::variance_from(expectation(family, f, settings), expectation(family, f2, settings));
}

template <typename Scalar>
IntegralEstimate<Scalar> coordinate_mean(const Family<Scalar>& family, int axis,
                                         const MomentSettings<Scalar>& settings = {}) {
  return expectation(family, coordinate_power<Scalar>(family.dim(), axis, 1), settings);
}

template <typename Scalar>
IntegralEstimate<Scalar> coordinate_variance(const Family<Scalar>& family, int axis,
                                             const MomentSettings<Scalar>& settings = {}) {
  return variance(family, coordinate_power<Scalar>(family.dim(), axis, 1), settings);
}

/// Variance of x^axis computed numerically next to two closed forms.
///
/// `marginal_closed_form` is the variance of the one-dimensional marginal
/// (2 / rate^2 for Laplace factors, 1/2 for the Gaussian), which is what the
/// numerics converge to. For the Klein-Gordon family, `reference_formula` is
/// the frequently quoted 1 / (2 (D-2)^{(D-6)/2} m^2); it coincides with the
/// marginal result for D = 3 and D = 4 only, and `discrepancy` flags the
/// dimensions where the two differ.
template <typename Scalar = double>
struct VarianceReport {
  int axis = 0;
  Scalar measured = 0;
  Scalar measured_error = 0;
  Scalar marginal_closed_form = 0;
  std::optional<Scalar> reference_formula;
  bool discrepancy = false;
};

/// The closed-form fields of VarianceReport, without any integration.
template <typename Scalar>
VarianceReport<Scalar> variance_closed_forms(const Family<Scalar>& family, int axis) {
  const auto factor = marginal_factor(family, axis);
  VarianceReport<Scalar> r;
  r.axis = axis;
  r.marginal_closed_form = factor.shape == MarginalFactor<Scalar>::Shape::gaussian
                               ? Scalar(0.5)
                               : 2 / (factor.rate * factor.rate);
  if (family.kind() == FamilyKind::KleinGordonOnShell) {
    const Scalar m = *family.mass();
    const Scalar d2 = static_cast<Scalar>(family.dim() - 2);
    const Scalar ref = 1 / (2 * std::pow(d2, (static_cast<Scalar>(family.dim()) - 6) / 2) * m * m);
    r.reference_formula = ref;
    r.discrepancy = std::abs(ref - r.marginal_closed_form) > Scalar(1e-9) * r.marginal_closed_form;
  }
  return r;
}

template <typename Scalar>
VarianceReport<Scalar> coordinate_variance_report(const Family<Scalar>& family, int axis,
                                                  const MomentSettings<Scalar>& settings = {}) {
  auto r = variance_closed_forms(family, axis);
  const auto est = coordinate_variance(family, axis, settings);
  r.measured = est.value;
  r.measured_error = est.error_estimate;
  return r;
}

// ---------------------------------------------------------------------------
// Metric post-processing

template <typename Scalar = double>
struct TranslationReport {
  std::vector<MetricResult<Scalar>> metrics;
  Scalar max_deviation = 0;
  /// Combined error estimate of the entry attaining max_deviation.
  Scalar combined_error = 0;
  bool passed = false;
};

/// Computes the quadrature metric at each theta and compares all pairs
/// entrywise. Passes when every deviation is within the sum of the two
/// entries' error estimates (plus a rounding floor).
template <typename Scalar>
TranslationReport<Scalar> translation_invariance_check(const Family<Scalar>& family,
                                                       const std::vector<Vector<Scalar>>& thetas,
                                                       const QuadratureSpec<Scalar>& spec = {},
                                                       QuadratureRoute route = QuadratureRoute::automatic) {
  if (thetas.size() < 2) throw ArgumentError("translation check needs at least two parameter points");
  TranslationReport<Scalar> report;
  for (const auto& t : thetas) report.metrics.push_back(fisher_metric_quadrature(family.with_theta(t), spec, route));

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  report.passed = true;
  for (std::size_t i = 0; i < report.metrics.size(); ++i) {
    for (std::size_t j = i + 1; j < report.metrics.size(); ++j) {
      const auto& gi = report.metrics[i];
      const auto& gj = report.metrics[j];
      for (Eigen::Index a = 0; a < gi.g.rows(); ++a) {
        for (Eigen::Index b = 0; b < gi.g.cols(); ++b) {
          const Scalar dev = std::abs(gi.g(a, b) - gj.g(a, b));
          const Scalar allowed =
              gi.error(a, b) + gj.error(a, b) + 64 * eps * std::max(std::abs(gi.g(a, b)), std::abs(gj.g(a, b)));
          if (dev > allowed) report.passed = false;
          if (dev >= report.max_deviation) {
            report.max_deviation = dev;
            report.combined_error = allowed;
          }
        }
      }
    }
  }
  return report;
}

/// |g_ab dtheta^a dtheta^b|^{1/2}; exact for constant metrics. The absolute
/// value admits pseudo-Euclidean metrics.
template <typename Scalar, typename Derived>
Scalar rao_distance(const MetricResult<Scalar>& metric, const Eigen::MatrixBase<Derived>& dtheta) {
  if (dtheta.size() != metric.g.rows()) throw ArgumentError("displacement length does not match the metric");
  const Vector<Scalar> d = dtheta.template cast<Scalar>();
  return std::sqrt(std::abs(d.dot(metric.g * d)));
}

template <typename Scalar = double>
struct NormalizedMetric {
  Scalar scale = 1;  ///< theta_bar = scale * theta
  MetricResult<Scalar> metric;
};

/// Rescales theta by 2m / sqrt(D - 2), which maps the Klein-Gordon metric
/// 4 m^2 / (D - 2) delta to delta.
template <typename Scalar>
NormalizedMetric<Scalar> normalize_coordinates(const MetricResult<Scalar>& metric, int dim, Scalar mass) {
  if (dim <= 2 || !(mass > 0)) throw DomainError("normalization needs D >= 3 and m > 0");
  const Scalar scale_sq = 4 * mass * mass / static_cast<Scalar>(dim - 2);
  NormalizedMetric<Scalar> out;
  out.scale = std::sqrt(scale_sq);
  out.metric = metric;
  out.metric.g = metric.g / scale_sq;
  out.metric.error = metric.error / scale_sq;
  return out;
}

template <typename Scalar = double>
struct WickRotated {
  MetricResult<Scalar> metric;
  Signature signature;
};

/// theta^a -> i theta^a for a in `rotate`. Entries with both indices rotated
/// pick up i^2 = -1; entries with exactly one rotated index would become
/// imaginary and must be within `tol` of zero (they are dropped).
template <typename Scalar>
WickRotated<Scalar> wick_rotate(const MetricResult<Scalar>& metric, const std::set<int>& rotate, Scalar tol = Scalar(1e-12)) {
  const Eigen::Index n = metric.g.rows();
  for (int i : rotate)
    if (i < 0 || i >= n) throw ArgumentError("rotation index out of range");
  auto rotated = [&](Eigen::Index i) { return rotate.count(static_cast<int>(i)) > 0; };
  WickRotated<Scalar> out;
  out.metric = metric;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const int k = rotated(a) + rotated(b);
      if (k == 1) {
        if (std::abs(metric.g(a, b)) > tol) {
          std::ostringstream msg;
          msg << "Wick rotation would make g_" << a << b << " = " << metric.g(a, b) << " imaginary";
          throw RotationInconsistencyError(msg.str());
        }
        out.metric.g(a, b) = 0;
      } else if (k == 2) {
        out.metric.g(a, b) = -metric.g(a, b);
      }
    }
  }
  out.signature = definiteness(out.metric.g);
  return out;
}

}  // namespace infogeo
