#pragma once

// Deterministic integration over R^D: adaptive Gauss-Kronrod in one
// dimension, products of one-dimensional integrals for separable
// integrands, and tensor-product Gauss-Legendre for the general case.
// Infinite ranges are compactified onto bounded parameter intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <thread>
#include <vector>

#include "infogeo/errors.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

enum class Compactification {
  rational_map,  ///< t = s * u / (1 - u^2)
  tanh_map,      ///< t = s * atanh(u)
};

enum class IntegrationMethod { adaptive1d, separable, tensor, montecarlo };

template <typename Scalar = double>
struct QuadratureSpec {
  Scalar rel_tol = Scalar(1e-8);
  Scalar abs_tol = Scalar(1e-12);
  int max_subdivisions = 2000;
  Compactification compactification = Compactification::rational_map;
  /// Per-axis locations where the integrand is not smooth. Missing axes
  /// have no split points.
  std::vector<std::vector<Scalar>> split_points;
  /// Per-axis length scale of the compactification map. Missing axes use 1.
  std::vector<Scalar> scales;
  /// Largest Gauss-Legendre rule per panel tried by the tensor route.
  int max_nodes_per_panel = 128;
  /// Upper bound on tensor-grid evaluations per refinement level.
  std::int64_t max_tensor_points = 400'000'000;
  /// Threads for the tensor route; 0 picks the hardware concurrency. The
  /// result does not depend on this value.
  int workers = 0;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
      throw ArgumentError("quadrature tolerances must be positive");
    if (max_subdivisions < 1) throw ArgumentError("max_subdivisions must be >= 1");
    if (max_nodes_per_panel < 8) throw ArgumentError("max_nodes_per_panel must be >= 8");
    for (const auto& s : scales)
      if (!(s > 0)) throw ArgumentError("compactification scales must be positive");
  }

  std::span<const Scalar> splits(int axis) const {
    if (axis < 0 || static_cast<std::size_t>(axis) >= split_points.size()) return {};
    return split_points[static_cast<std::size_t>(axis)];
  }

  Scalar scale(int axis) const {
    if (axis < 0 || static_cast<std::size_t>(axis) >= scales.size()) return Scalar(1);
    return scales[static_cast<std::size_t>(axis)];
  }
};

template <typename Scalar = double>
struct IntegralEstimate {
  Scalar value = 0;
  Scalar error_estimate = 0;  ///< heuristic, not a guaranteed bound
  std::int64_t evaluations = 0;
  IntegrationMethod method = IntegrationMethod::adaptive1d;
};

namespace detail {

/// One smooth piece of the integration range, expressed over a bounded
/// parameter interval [u_lo, u_hi].
template <typename Scalar>
struct Panel {
  enum class Kind { finite, upper_tail, lower_tail, full_line } kind;
  Scalar anchor = 0;  ///< left end (finite, upper_tail) or right end (lower_tail)
  Scalar right = 0;   ///< right end for finite panels
  Scalar scale = 1;
  Compactification map = Compactification::rational_map;

  Scalar u_lo() const {
    switch (kind) {
      case Kind::finite: return anchor;
      case Kind::full_line: return Scalar(-1);
      default: return Scalar(0);
    }
  }
  Scalar u_hi() const { return kind == Kind::finite ? right : Scalar(1); }

  /// Maps u to (t, dt/du). Points mapped to infinity report a zero Jacobian.
  std::pair<Scalar, Scalar> map_point(Scalar u) const {
    if (kind == Kind::finite) return {u, Scalar(1)};
    const Scalar one_minus = (Scalar(1) - u) * (Scalar(1) + u);
    if (!(one_minus > 0)) return {Scalar(0), Scalar(0)};
    Scalar phi, dphi;
    if (map == Compactification::rational_map) {
      phi = u / one_minus;
      dphi = (Scalar(1) + u * u) / (one_minus * one_minus);
    } else {
      phi = std::atanh(u);
      dphi = Scalar(1) / one_minus;
    }
    phi *= scale;
    dphi *= scale;
    switch (kind) {
      case Kind::upper_tail: return {anchor + phi, dphi};
      case Kind::lower_tail: return {anchor - phi, dphi};
      default: return {phi, dphi};
    }
  }
};

template <typename Scalar>
std::vector<Panel<Scalar>> make_panels(Scalar lo, Scalar hi, std::span<const Scalar> splits,
                                       Scalar scale, Compactification map) {
  if (!(lo < hi)) throw ArgumentError("integration interval must satisfy lo < hi");
  std::vector<Scalar> cuts;
  for (Scalar s : splits)
    if (std::isfinite(s) && s > lo && s < hi) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Scalar> edges;
  edges.push_back(lo);
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(hi);

  using K = typename Panel<Scalar>::Kind;
  std::vector<Panel<Scalar>> panels;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const Scalar a = edges[i], b = edges[i + 1];
    const bool a_inf = std::isinf(a), b_inf = std::isinf(b);
    Panel<Scalar> p{K::finite, a, b, scale, map};
    if (a_inf && b_inf) {
      p.kind = K::full_line;
    } else if (b_inf) {
      p.kind = K::upper_tail;
    } else if (a_inf) {
      p.kind = K::lower_tail;
      p.anchor = b;
    }
    panels.push_back(p);
  }
  return panels;
}

// 15-point Kronrod abscissae with the embedded 7-point Gauss weights.
inline constexpr long double kKronrodNodes[8] = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr long double kKronrodWeights[8] = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr long double kGaussWeights[4] = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

template <typename Scalar>
struct Segment {
  int panel;
  Scalar lo, hi;
  Scalar value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

/// Gauss-Kronrod 7/15 on [lo, hi] of g(u) with the QUADPACK error heuristic.
template <typename Scalar, typename G>
Segment<Scalar> kronrod15(const G& g, int panel, Scalar lo, Scalar hi) {
  const Scalar center = (lo + hi) / 2;
  const Scalar half = (hi - lo) / 2;
  const Scalar f_center = g(center);
  Scalar res_k = static_cast<Scalar>(kKronrodWeights[7]) * f_center;
  Scalar res_g = static_cast<Scalar>(kGaussWeights[3]) * f_center;
  Scalar res_abs = std::abs(res_k);
  Scalar fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * static_cast<Scalar>(kKronrodNodes[j]);
    fv1[j] = g(center - dx);
    fv2[j] = g(center + dx);
    const Scalar w = static_cast<Scalar>(kKronrodWeights[j]);
    res_k += w * (fv1[j] + fv2[j]);
    res_abs += w * (std::abs(fv1[j]) + std::abs(fv2[j]));
    if (j % 2 == 1) res_g += static_cast<Scalar>(kGaussWeights[j / 2]) * (fv1[j] + fv2[j]);
  }
  const Scalar mean = res_k / 2;
  Scalar res_asc = static_cast<Scalar>(kKronrodWeights[7]) * std::abs(f_center - mean);
  for (int j = 0; j < 7; ++j)
    res_asc += static_cast<Scalar>(kKronrodWeights[j]) *
               (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

  const Scalar ah = std::abs(half);
  res_k *= half;
  res_abs *= ah;
  res_asc *= ah;
  Scalar err = std::abs((res_k - res_g * half));
  if (res_asc != 0 && err != 0)
    err = res_asc * std::min(Scalar(1), std::pow(Scalar(200) * err / res_asc, Scalar(1.5)));
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  if (res_abs > std::numeric_limits<Scalar>::min() / (50 * eps))
    err = std::max(eps * 50 * res_abs, err);
  return {panel, lo, hi, res_k, err};
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
template <typename Scalar>
void gauss_legendre(int n, std::vector<Scalar>& nodes, std::vector<Scalar>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0);
  weights.assign(static_cast<std::size_t>(n), 0);
  const long double pi = 3.141592653589793238462643383279502884L;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double x = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-19L) break;
    }
    {
      long double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    const long double w = 2 / ((1 - x * x) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = static_cast<Scalar>(-x);
    nodes[static_cast<std::size_t>(n - 1 - i)] = static_cast<Scalar>(x);
    weights[static_cast<std::size_t>(i)] = static_cast<Scalar>(w);
    weights[static_cast<std::size_t>(n - 1 - i)] = static_cast<Scalar>(w);
  }
}

/// Composite one-dimensional rule over all panels of an axis: Gauss-Legendre
/// with `n` nodes per panel, in the original variable t.
template <typename Scalar>
struct AxisRule {
  std::vector<Scalar> points;
  std::vector<Scalar> weights;
};

template <typename Scalar>
AxisRule<Scalar> composite_rule(const std::vector<Panel<Scalar>>& panels, int n) {
  std::vector<Scalar> x, w;
  gauss_legendre<Scalar>(n, x, w);
  AxisRule<Scalar> rule;
  for (const auto& p : panels) {
    const Scalar lo = p.u_lo(), hi = p.u_hi();
    const Scalar c = (lo + hi) / 2, h = (hi - lo) / 2;
    for (int i = 0; i < n; ++i) {
      const auto [t, jac] = p.map_point(c + h * x[static_cast<std::size_t>(i)]);
      if (jac == 0 || !std::isfinite(t) || !std::isfinite(jac)) continue;
      rule.points.push_back(t);
      rule.weights.push_back(w[static_cast<std::size_t>(i)] * h * jac);
    }
  }
  return rule;
}

}  // namespace detail

/// Adaptive integral of f over (lo, hi); either end may be infinite. The
/// range is cut at the axis-0 split points of `spec` so that every panel
/// sees a smooth integrand.
template <typename Scalar = double, typename F>
IntegralEstimate<Scalar> integrate_1d(const F& f, Scalar lo, Scalar hi,
                                      const QuadratureSpec<Scalar>& spec = {}, int axis = 0) {
  spec.validate();
  const auto panels =
      detail::make_panels<Scalar>(lo, hi, spec.splits(axis), spec.scale(axis), spec.compactification);

  std::int64_t evaluations = 0;
  auto integrand_for = [&](int panel) {
    return [&, panel](Scalar u) -> Scalar {
      ++evaluations;
      const auto [t, jac] = panels[static_cast<std::size_t>(panel)].map_point(u);
      if (jac == 0 || !std::isfinite(t) || !std::isfinite(jac)) return Scalar(0);
      const Scalar v = static_cast<Scalar>(f(t));
      return v == 0 ? Scalar(0) : v * jac;
    };
  };

  std::priority_queue<detail::Segment<Scalar>> queue;
  for (int i = 0; i < static_cast<int>(panels.size()); ++i) {
    const auto& p = panels[static_cast<std::size_t>(i)];
    queue.push(detail::kronrod15<Scalar>(integrand_for(i), i, p.u_lo(), p.u_hi()));
  }

  auto totals = [&]() {
    // Sum in a canonical order so the result is independent of heap layout.
    auto copy = queue;
    std::vector<detail::Segment<Scalar>> segs;
    while (!copy.empty()) {
      segs.push_back(copy.top());
      copy.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) {
      return a.panel != b.panel ? a.panel < b.panel : a.lo < b.lo;
    });
    Scalar value = 0, error = 0;
    for (const auto& s : segs) {
      value += s.value;
      error += s.error;
    }
    return std::pair{value, error};
  };

  Scalar value = 0, error = 0;
  {
    auto copy = queue;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
  }

  int subdivisions = 0;
  while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(value)) &&
         subdivisions < spec.max_subdivisions) {
    const auto worst = queue.top();
    queue.pop();
    const Scalar mid = (worst.lo + worst.hi) / 2;
    const auto left = detail::kronrod15<Scalar>(integrand_for(worst.panel), worst.panel, worst.lo, mid);
    const auto right = detail::kronrod15<Scalar>(integrand_for(worst.panel), worst.panel, mid, worst.hi);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++subdivisions;
  }

  std::tie(value, error) = totals();
  if (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(value))) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge after " << subdivisions
        << " subdivisions (estimate " << value << ", error " << error << ")";
    throw ConvergenceError(msg.str(), static_cast<double>(value), static_cast<double>(error));
  }
  return {value, error, evaluations, IntegrationMethod::adaptive1d};
}

/// Integral over R^D of a product of per-axis factors, computed as the
/// product of one-dimensional integrals. Errors combine to first order:
/// sum_a err_a * prod_{b != a} |I_b|.
template <typename Scalar = double>
IntegralEstimate<Scalar> integrate_rd_separable(
    const std::vector<std::function<Scalar(Scalar)>>& factors, const QuadratureSpec<Scalar>& spec = {}) {
  if (factors.empty()) throw ArgumentError("separable integral needs at least one factor");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<IntegralEstimate<Scalar>> parts;
  parts.reserve(factors.size());
  for (std::size_t a = 0; a < factors.size(); ++a)
    parts.push_back(integrate_1d<Scalar>(factors[a], -inf, inf, spec, static_cast<int>(a)));

  IntegralEstimate<Scalar> out{Scalar(1), Scalar(0), 0, IntegrationMethod::separable};
  for (const auto& p : parts) {
    out.value *= p.value;
    out.evaluations += p.evaluations;
  }
  for (std::size_t a = 0; a < parts.size(); ++a) {
    Scalar term = parts[a].error_estimate;
    for (std::size_t b = 0; b < parts.size(); ++b)
      if (b != a) term *= std::abs(parts[b].value);
    out.error_estimate += term;
  }
  return out;
}

/// Largest dimension accepted by the tensor-product route.
inline constexpr int kMaxTensorDim = 5;

/// Integral over R^D by tensor products of compactified, split per-axis
/// Gauss-Legendre rules. The per-panel order doubles until two successive
/// levels agree to tolerance.
template <typename Scalar = double, typename F>
IntegralEstimate<Scalar> integrate_rd_tensor(const F& f, int dim, const QuadratureSpec<Scalar>& spec = {}) {
  spec.validate();
  if (dim < 1) throw ArgumentError("dimension must be positive");
  if (dim > kMaxTensorDim)
    throw CapabilityError("tensor quadrature supports D <= 5; use Monte Carlo or a separable route");

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<std::vector<detail::Panel<Scalar>>> axis_panels;
  for (int a = 0; a < dim; ++a)
    axis_panels.push_back(
        detail::make_panels<Scalar>(-inf, inf, spec.splits(a), spec.scale(a), spec.compactification));

  const int workers = spec.workers > 0 ? spec.workers
                                       : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  std::int64_t evaluations = 0;

  auto level_sum = [&](int n) -> std::pair<Scalar, Scalar> {
    std::vector<detail::AxisRule<Scalar>> rules;
    std::int64_t points = 1;
    for (int a = 0; a < dim; ++a) {
      rules.push_back(detail::composite_rule(axis_panels[static_cast<std::size_t>(a)], n));
      points *= static_cast<std::int64_t>(rules.back().points.size());
    }
    if (points > spec.max_tensor_points)
      throw ConvergenceError("tensor grid exceeds max_tensor_points", 0.0, 0.0);
    evaluations += points;

    const auto& outer = rules[0];
    const std::size_t n_outer = outer.points.size();
    std::vector<Scalar> slice_sum(n_outer, 0), slice_abs(n_outer, 0);

    auto run_slices = [&](std::size_t first, std::size_t stride) {
      Vector<Scalar> x(dim);
      std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
      for (std::size_t i0 = first; i0 < n_outer; i0 += stride) {
        x(0) = outer.points[i0];
        Scalar sum = 0, sum_abs = 0;
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
          Scalar w = outer.weights[i0];
          for (int a = 1; a < dim; ++a) {
            const auto& r = rules[static_cast<std::size_t>(a)];
            x(a) = r.points[idx[static_cast<std::size_t>(a)]];
            w *= r.weights[idx[static_cast<std::size_t>(a)]];
          }
          const Scalar v = static_cast<Scalar>(f(x));
          sum += w * v;
          sum_abs += std::abs(w * v);
          int a = dim - 1;
          for (; a >= 1; --a) {
            auto& k = idx[static_cast<std::size_t>(a)];
            if (++k < rules[static_cast<std::size_t>(a)].points.size()) break;
            k = 0;
          }
          if (a < 1) break;
        }
        slice_sum[i0] = sum;
        slice_abs[i0] = sum_abs;
      }
    };

    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n_outer);
    if (n_threads <= 1) {
      run_slices(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(run_slices, t, n_threads);
    }
    Scalar total = 0, total_abs = 0;
    for (std::size_t i = 0; i < n_outer; ++i) {
      total += slice_sum[i];
      total_abs += slice_abs[i];
    }
    return {total, total_abs};
  };

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  int n = 8;
  Scalar previous = level_sum(n).first;
  while (true) {
    const int next = 2 * n;
    if (next > spec.max_nodes_per_panel) {
      throw ConvergenceError("tensor quadrature did not converge at the largest rule",
                             static_cast<double>(previous), static_cast<double>(inf));
    }
    std::pair<Scalar, Scalar> level;
    try {
      level = level_sum(next);
    } catch (const ConvergenceError&) {
      throw ConvergenceError("tensor quadrature did not converge within max_tensor_points",
                             static_cast<double>(previous), static_cast<double>(inf));
    }
    const auto [current, current_abs] = level;
    const Scalar diff = std::abs(current - previous);
    const Scalar floor = 64 * eps * current_abs;
    if (diff <= std::max(spec.abs_tol, spec.rel_tol * std::abs(current))) {
      return {current, std::max(diff, floor), evaluations, IntegrationMethod::tensor};
    }
    previous = current;
    n = next;
  }
}

}  // namespace infogeo
