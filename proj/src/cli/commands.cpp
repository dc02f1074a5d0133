#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cli/cli.hpp"
#include "cli/serialize.hpp"

namespace infogeo::cli {

namespace {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0;
  double tolerance = 0;
  std::string note;
};

FisherSettings<double> fisher_settings(const RunConfig& c) {
  FisherSettings<double> s;
  s.quadrature = c.quadrature;
  s.montecarlo = c.montecarlo;
  return s;
}

MomentSettings<double> moment_settings(const RunConfig& c) {
  MomentSettings<double> s;
  s.route = c.method == MetricMethod::montecarlo ? MomentRoute::montecarlo : MomentRoute::quadrature;
  s.quadrature = c.quadrature;
  s.montecarlo = c.montecarlo;
  return s;
}

Json family_header(const std::string& command, const RunConfig& c) {
  Json j;
  j["command"] = command;
  j["family"] = std::string(to_string(c.family));
  j["dim"] = c.dim;
  j["mass"] = c.family == FamilyKind::KleinGordonOnShell ? Json(c.mass) : Json();
  const Vectord theta = c.theta_vector();
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  return j;
}

std::string render(const RunConfig& c, const Json& doc, const Table& table) {
  return c.format == OutputFormat::json ? doc.dump(2) + "\n" : table.to_csv();
}

/// Metric from the configured method; convergence failures return the
/// partial estimate flagged unconverged.
MetricResult<double> compute_metric(const Familyd& family, const RunConfig& c) {
  try {
    return fisher_metric(family, c.method, fisher_settings(c));
  } catch (const MetricConvergenceError<double>& e) {
    return e.partial();
  }
}

double max_off_diagonal(const Matrixd& g) {
  Matrixd off = g;
  off.diagonal().setZero();
  return off.size() ? off.cwiseAbs().maxCoeff() : 0.0;
}

// ---------------------------------------------------------------------------

int cmd_metric(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto family = make_family(c);
  const auto r = compute_metric(family, c);
  emit(c, c.format == OutputFormat::json ? metric_to_json(r, c).dump(2) + "\n" : metric_to_csv(r, c), out);
  if (r.unconverged) {
    err << "infogeo: metric integration did not converge; wrote the best estimate\n";
    return kExitUnconverged;
  }
  return kExitOk;
}

int cmd_moments(const RunConfig& c, std::ostream& out) {
  const auto family = make_family(c);
  const auto settings = moment_settings(c);
  Table t;
  t.header = {"axis", "mean", "mean_error", "variance", "variance_error", "marginal_closed_form",
              "reference_formula", "discrepancy"};
  for (int a = 0; a < c.dim; ++a) {
    auto report = variance_closed_forms(family, a);
    double mean = family.theta()(a), mean_err = 0;
    if (c.method == MetricMethod::analytic) {
      report.measured = report.marginal_closed_form;
    } else {
      const auto m = coordinate_mean(family, a, settings);
      const auto v = coordinate_variance(family, a, settings);
      mean = m.value;
      mean_err = m.error_estimate;
      report.measured = v.value;
      report.measured_error = v.error_estimate;
    }
    t.rows.push_back({a, mean, mean_err, report.measured, report.measured_error, report.marginal_closed_form,
                      report.reference_formula ? Json(*report.reference_formula) : Json(), report.discrepancy});
  }
  Json doc = family_header("moments", c);
  doc["method"] = std::string(to_string(c.method));
  doc["seed"] = c.method == MetricMethod::montecarlo ? Json(c.montecarlo.seed) : Json();
  doc["moments"] = t.to_json();
  doc["tool_version"] = kVersion;
  emit(c, render(c, doc, t), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Metric field over the first min(D, 3) axes around theta, other axes held
/// at theta; the provider returns the matching block of the full metric.
template <typename MetricFn>
MetricField<double> sub_field(const Familyd& family, int count, double spacing, MetricFn metric_at) {
  const int k = std::min(family.dim(), 3);
  const Vectord theta = family.theta();
  const auto lattice = centered_lattice<double>(theta.head(k), spacing, count);
  return sample_metric_field(lattice, [&](const Vectord& p) {
    Vectord full = theta;
    full.head(k) = p;
    MetricResult<double> r = metric_at(family.with_theta(full));
    MetricResult<double> block = MetricResult<double>::from_matrix(r.g.topLeftCorner(k, k), r.method);
    block.error = r.error.topLeftCorner(k, k);
    return block;
  });
}

std::vector<Check> kg_field_checks(const Familyd& family, const RunConfig& c) {
  std::vector<Check> checks;
  const int d = c.dim;
  auto sol = KleinGordonSolution<double>::normalized(d, c.mass, family.theta());
  const double rate = sol.decay_rate();
  const double h = std::min(1e-2, 1e-3 / rate);

  std::mt19937_64 rng(c.montecarlo.seed);
  std::uniform_real_distribution<double> offset(-3 / rate, 3 / rate);
  double worst_rel = 0, worst_ratio_dev = 0, worst_identity = 0, ratio_at_worst = 4;
  for (int i = 0; i < 100; ++i) {
    Vectord x(d);
    for (int a = 0; a < d; ++a) {
      double v;
      do v = offset(rng);
      while (std::abs(v) <= 5 * h);
      x(a) = sol.center(a) + v;
    }
    const double phi = field_value(sol, x);
    const double fine = eom_residual(sol, x, h);
    const double coarse = eom_residual(sol, x, 2 * h);
    worst_rel = std::max(worst_rel, std::abs(fine) / phi);
    const double ratio = coarse / fine;
    if (std::abs(ratio - 4) >= worst_ratio_dev) {
      worst_ratio_dev = std::abs(ratio - 4);
      ratio_at_worst = ratio;
    }
    const double p = density(family, x);
    worst_identity = std::max(worst_identity, std::abs(lagrangian_density(sol, x) + p) / p);
  }
  std::ostringstream step;
  step << "h = " << h << ", 100 points";
  checks.push_back({"eom_residual", worst_rel <= 1e-5, worst_rel, 1e-5, step.str()});
  checks.push_back({"eom_convergence_ratio", worst_ratio_dev <= 0.4, ratio_at_worst, 0.4,
                    "residual(2h) / residual(h), expected 4"});
  checks.push_back({"onshell_identity", worst_identity <= 1e-12, worst_identity, 1e-12, "max |L + P| / P"});
  return checks;
}

struct VerifyOutcome {
  std::vector<Check> checks;
  std::vector<VarianceReport<double>> variance;
  bool unconverged = false;
};

VerifyOutcome run_checks(const RunConfig& c) {
  VerifyOutcome o;
  auto& checks = o.checks;
  const auto family = make_family(c);
  const int d = c.dim;
  const Vectord theta = family.theta();
  const double amp2 = c.amplitude_scale * c.amplitude_scale;

  // Normalization with the amplitude as configured.
  {
    double total;
    if (family.kind() == FamilyKind::KleinGordonOnShell) {
      auto sol = KleinGordonSolution<double>::normalized(d, c.mass, theta);
      sol.amplitude *= c.amplitude_scale;
      total = -onshell_action(sol, c.quadrature).value;
    } else {
      SeparableFunction<double> one;
      one.factors.resize(static_cast<std::size_t>(d));
      MomentSettings<double> s;
      s.quadrature = c.quadrature;
      total = amp2 * expectation(family, one, s).value;
    }
    checks.push_back({"normalization", std::abs(total - 1) <= 1e-6, total, 1e-6, "integral of P, expected 1"});
  }

  if (family.kind() == FamilyKind::KleinGordonOnShell) {
    auto field = kg_field_checks(family, c);
    checks.insert(checks.end(), field.begin(), field.end());
  }

  // Translation invariance of the quadrature metric.
  {
    Vectord shift = Vectord::Zero(d);
    const double pattern[3] = {0.3, -1.2, 0.0};
    for (int a = 0; a < std::min(d, 3); ++a) shift(a) = pattern[a];
    try {
      const auto report = translation_invariance_check(
          family, {theta, Vectord(theta + shift), Vectord(theta.array() + 2.0)}, c.quadrature);
      const double tol = std::max(2e-6, report.combined_error);
      checks.push_back({"translation_invariance", report.max_deviation <= tol, report.max_deviation, tol,
                        "max |g(theta') - g(theta)|"});
    } catch (const MetricConvergenceError<double>&) {
      o.unconverged = true;
      checks.push_back({"translation_invariance", false, NAN, 2e-6, "unconverged"});
    }
  }

  const auto analytic = fisher_metric_analytic(family);
  const auto metric = compute_metric(family, c);
  o.unconverged = o.unconverged || metric.unconverged;
  const double scale = std::max(1.0, analytic.g.cwiseAbs().maxCoeff());
  {
    const Matrixd dev = (metric.g - analytic.g).cwiseAbs();
    bool ok = !metric.unconverged;
    double tol = 0;
    switch (c.method) {
      case MetricMethod::analytic: tol = 0; break;
      case MetricMethod::quadrature: tol = 1e-6 * scale; break;
      case MetricMethod::finite_difference_score: tol = std::max(1e-4, metric.error.maxCoeff()); break;
      case MetricMethod::montecarlo: tol = 4 * metric.error.maxCoeff() + 1e-12 * scale; break;
    }
    if (c.method == MetricMethod::montecarlo) {
      for (Eigen::Index i = 0; i < dev.rows(); ++i)
        for (Eigen::Index j = 0; j < dev.cols(); ++j)
          ok = ok && dev(i, j) <= 4 * metric.error(i, j) + 1e-12 * scale;
    } else {
      ok = ok && dev.maxCoeff() <= tol;
    }
    checks.push_back({"metric_value", ok, dev.maxCoeff(), tol,
                      std::string("max |g - g_analytic| by ") + std::string(to_string(c.method))});

    const double off = max_off_diagonal(metric.g);
    const double off_tol = c.method == MetricMethod::montecarlo ? tol
                           : c.method == MetricMethod::finite_difference_score ? 1e-4
                                                                               : 1e-6 * scale;
    checks.push_back({"off_diagonal", off <= off_tol, off, off_tol, "max |g_ab|, a != b"});

    const auto sig = definiteness(metric);
    checks.push_back({"positive_definite", sig == Signature{d, 0, 0}, static_cast<double>(sig.n_plus),
                      static_cast<double>(d), "number of positive eigenvalues"});
  }

  // Curvature of the analytic and quadrature metric fields.
  {
    const auto field = sub_field(family, 7, 0.25, [](const Familyd& f) { return fisher_metric_analytic(f); });
    const auto report = flatness_report(field, 1e-9);
    checks.push_back({"flatness_analytic", report.verdict == FlatnessVerdict::flat_within_tol,
                      std::max(report.max_abs_christoffel, report.max_abs_riemann), 1e-9,
                      "max |Gamma|, |R| on a 7-point lattice"});
  }
  try {
    const double spacing = 0.25;
    const auto field = sub_field(family, 5, spacing,
                                 [&](const Familyd& f) { return fisher_metric_quadrature(f, c.quadrature); });
    double err = 0;
    for (const auto& v : field.values) err = std::max(err, v.error.maxCoeff());
    const double tol = quadrature_curvature_tolerance(err, spacing);
    const auto report = flatness_report(field, tol);
    checks.push_back({"flatness_quadrature", report.verdict == FlatnessVerdict::flat_within_tol,
                      std::max(report.max_abs_christoffel, report.max_abs_riemann), tol,
                      "max |Gamma|, |R| on a 5-point lattice"});
  } catch (const MetricConvergenceError<double>&) {
    o.unconverged = true;
    checks.push_back({"flatness_quadrature", false, NAN, 1e-3, "unconverged"});
  }

  // Moments.
  {
    const auto settings = moment_settings(c);
    const bool mc = c.method == MetricMethod::montecarlo;
    double worst_mean = 0, worst_var = 0;
    bool mean_ok = true, var_ok = true;
    for (int a = 0; a < d; ++a) {
      const auto m = coordinate_mean(family, a, settings);
      const double mean_dev = std::abs(m.value - theta(a));
      worst_mean = std::max(worst_mean, mean_dev);
      mean_ok = mean_ok && mean_dev <= (mc ? 4 * m.error_estimate : 1e-6 * std::max(1.0, std::abs(theta(a))));

      auto report = coordinate_variance_report(family, a, settings);
      const double var_dev = std::abs(report.measured - report.marginal_closed_form);
      worst_var = std::max(worst_var, var_dev);
      var_ok = var_ok &&
               var_dev <= (mc ? 4 * report.measured_error : 1e-6 * std::max(1.0, report.marginal_closed_form));
      o.variance.push_back(report);
    }
    checks.push_back({"mean", mean_ok, worst_mean, mc ? NAN : 1e-6, "max |E[x] - theta|"});
    checks.push_back({"variance", var_ok, worst_var, mc ? NAN : 1e-6, "max |V[x] - marginal closed form|"});
  }
  return o;
}

VerifyOutcome run_round_trip(RunConfig& c) {
  std::ifstream in(c.against);
  if (!in) throw UsageError("cannot open '" + c.against + "'");
  Json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("'" + c.against + "' is not valid JSON: " + e.what());
  }
  const auto stored = metric_from_json(doc, c);
  c.validate();
  VerifyOutcome o;

  const Json again = metric_to_json(stored, c);
  const bool same_text = again["g"].dump() == doc["g"].dump() && again["g_error"].dump() == doc["g_error"].dump();
  o.checks.push_back({"round_trip_reserialize", same_text, same_text ? 0.0 : 1.0, 0, "parse then dump reproduces g"});

  const auto fresh = compute_metric(make_family(c), c);
  o.unconverged = fresh.unconverged;
  const bool shape = fresh.g.rows() == stored.g.rows();
  double dev = shape ? (fresh.g - stored.g).cwiseAbs().maxCoeff() : INFINITY;
  if (shape) dev = std::max(dev, (fresh.error - stored.error).cwiseAbs().maxCoeff());
  o.checks.push_back({"round_trip_recompute", shape && dev == 0, dev, 0,
                      "recomputed metric matches the stored values exactly"});
  return o;
}

int cmd_verify(RunConfig c, std::ostream& out, std::ostream& err) {
  const VerifyOutcome o = c.against.empty() ? run_checks(c) : run_round_trip(c);
  bool passed = true;
  Table t;
  t.header = {"check", "passed", "value", "tolerance", "note"};
  for (const auto& ch : o.checks) {
    passed = passed && ch.passed;
    t.rows.push_back({ch.name, ch.passed, std::isfinite(ch.value) ? Json(ch.value) : Json(),
                      std::isfinite(ch.tolerance) ? Json(ch.tolerance) : Json(), ch.note});
  }
  Json doc = family_header("verify", c);
  doc["method"] = std::string(to_string(c.method));
  doc["seed"] = c.montecarlo.seed;
  doc["passed"] = passed;
  doc["checks"] = t.to_json();
  Json variance = Json::array();
  for (const auto& v : o.variance) {
    Json row;
    row["axis"] = v.axis;
    row["measured"] = v.measured;
    row["measured_error"] = v.measured_error;
    row["marginal_closed_form"] = v.marginal_closed_form;
    row["reference_formula"] = v.reference_formula ? Json(*v.reference_formula) : Json();
    row["discrepancy"] = v.discrepancy;
    variance.push_back(std::move(row));
  }
  doc["variance"] = variance;
  doc["tool_version"] = kVersion;
  emit(c, render(c, doc, t), out);
  if (o.unconverged) {
    err << "infogeo: integration did not converge during verification\n";
    return kExitUnconverged;
  }
  if (!passed) {
    for (const auto& ch : o.checks)
      if (!ch.passed) err << "infogeo: check failed: " << ch.name << '\n';
    return kExitVerifyFailed;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_table(const RunConfig& c, std::ostream& out) {
  Table t;
  t.header = {"dim", "mass", "amplitude", "g_diag_analytic", "g_diag_quadrature", "g_diag_quadrature_error",
              "variance_oracle", "variance_reference", "discrepancy", "scale"};
  bool unconverged = false;
  for (int d : c.dims) {
    for (double m : c.masses) {
      const auto family = Familyd::klein_gordon(d, m);
      const auto analytic = fisher_metric_analytic(family);
      MetricResult<double> quad;
      try {
        quad = fisher_metric_quadrature(family, c.quadrature);
      } catch (const MetricConvergenceError<double>& e) {
        quad = e.partial();
        unconverged = true;
      }
      const auto v = variance_closed_forms(family, 0);
      t.rows.push_back({d, m, normalization_constant(d, m), analytic.g(0, 0), quad.g(0, 0), quad.error(0, 0),
                        v.marginal_closed_form, *v.reference_formula, v.discrepancy,
                        2 * m / std::sqrt(static_cast<double>(d - 2))});
    }
  }
  Json doc;
  doc["command"] = "table";
  doc["family"] = "kg";
  doc["rows"] = t.to_json();
  doc["tool_version"] = kVersion;
  emit(c, render(c, doc, t), out);
  return unconverged ? kExitUnconverged : kExitOk;
}

int cmd_grid(const RunConfig& c, std::ostream& out) {
  const auto family = make_family(c);
  const Vectord theta = family.theta();
  const int n = c.points;
  const double step = 2 * c.half_width / (n - 1);
  const double mid = (n - 1) / 2.0;
  const auto [a0, a1] = c.axes;

  Table t;
  t.header = {"x" + std::to_string(a0), "x" + std::to_string(a1), "density"};
  Json data = Json::array();
  Vectord x = theta;
  for (int i = 0; i < n; ++i) {
    x(a0) = theta(a0) + (i - mid) * step;
    for (int j = 0; j < n; ++j) {
      x(a1) = theta(a1) + (j - mid) * step;
      const double p = density(family, x);
      t.rows.push_back({x(a0), x(a1), p});
      data.push_back(Json::array({x(a0), x(a1), p}));
    }
  }
  Json doc = family_header("grid", c);
  doc["axes"] = {a0, a1};
  doc["points"] = n;
  doc["half_width"] = c.half_width;
  doc["columns"] = t.header;
  doc["data"] = std::move(data);
  doc["tool_version"] = kVersion;
  emit(c, render(c, doc, t), out);
  return kExitOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    std::string help;
    RunConfig c = parse_arguments(args, &help);
    if (c.command == "help") {
      out << help;
      return kExitOk;
    }
    c.validate();
    if (c.command == "metric") return cmd_metric(c, out, err);
    if (c.command == "moments") return cmd_moments(c, out);
    if (c.command == "verify") return cmd_verify(c, out, err);
    if (c.command == "table") return cmd_table(c, out);
    if (c.command == "grid") return cmd_grid(c, out);
    throw UsageError("unknown command '" + c.command + "'");
  } catch (const ConvergenceError& e) {
    err << "infogeo: " << one_line(e.what()) << '\n';
    return kExitUnconverged;
  } catch (const std::exception& e) {
    err << "infogeo: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace infogeo::cli
