#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace infogeo {

enum class FamilyKind { KleinGordonOnShell, IsotropicGaussian, LaplaceProduct };

enum class MetricMethod { analytic, quadrature, montecarlo, finite_difference_score };

inline std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::KleinGordonOnShell: return "kg";
    case FamilyKind::IsotropicGaussian: return "gaussian";
    case FamilyKind::LaplaceProduct: return "laplace";
  }
  return "unknown";
}

inline std::string_view to_string(MetricMethod m) {
  switch (m) {
    case MetricMethod::analytic: return "analytic";
    case MetricMethod::quadrature: return "quadrature";
    case MetricMethod::montecarlo: return "montecarlo";
    case MetricMethod::finite_difference_score: return "fdscore";
  }
  return "unknown";
}

inline std::optional<FamilyKind> parse_family_kind(std::string_view s) {
  if (s == "kg") return FamilyKind::KleinGordonOnShell;
  if (s == "gaussian") return FamilyKind::IsotropicGaussian;
  if (s == "laplace") return FamilyKind::LaplaceProduct;
  return std::nullopt;
}

inline std::optional<MetricMethod> parse_metric_method(std::string_view s) {
  if (s == "analytic") return MetricMethod::analytic;
  if (s == "quadrature") return MetricMethod::quadrature;
  if (s == "montecarlo") return MetricMethod::montecarlo;
  if (s == "fdscore") return MetricMethod::finite_difference_score;
  return std::nullopt;
}

}  // namespace infogeo
