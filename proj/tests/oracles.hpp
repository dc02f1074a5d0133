#pragma once

// Independent reference integrators for tests. Deliberately plain: composite
// Simpson on explicitly truncated, explicitly split intervals, sharing no
// code with the library's quadrature.

#include <cmath>
#include <functional>
#include <initializer_list>
#include <vector>

namespace oracle {

/// Composite Simpson rule with `n` (even) intervals on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3;
}

/// Simpson over consecutive breakpoints.
inline double simpson_pieces(const std::function<double(double)>& f, std::initializer_list<double> edges,
                             int n = 200000) {
  std::vector<double> e(edges);
  double s = 0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) s += simpson(f, e[i], e[i + 1], n);
  return s;
}

/// Normalized Laplace marginal c exp(-2c|t - mu|).
inline double laplace_marginal(double t, double c, double mu = 0) { return c * std::exp(-2 * c * std::abs(t - mu)); }

}  // namespace oracle
