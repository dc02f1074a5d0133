// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "cli/cli.hpp"
#include "infogeo/infogeo.hpp"
#include "oracles.hpp"

using namespace infogeo;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!passed) detail << "; ";
      else detail.str("");
      passed = false;
      detail << what;
    }
  }
};

Vectord vec(std::initializer_list<double> v) {
  Vectord out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double max_off(const Matrixd& g) {
  Matrixd off = g;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff();
}

const int kDims[] = {3, 4, 5};
const double kMasses[] = {0.5, 1.0, 2.0};

void flat_metric_value(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  double worst_diag = 0, worst_off = 0;
  for (int d : kDims)
    for (double m : kMasses) {
      const auto g = fisher_metric_quadrature(Familyd::klein_gordon(d, m)).g;
      const double expected = 4 * m * m / (d - 2);
      for (int a = 0; a < d; ++a) worst_diag = std::max(worst_diag, std::abs(g(a, a) - expected));
      worst_off = std::max(worst_off, max_off(g));
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(worst_diag <= 1e-5, "diagonal deviation " + fmt(worst_diag));
  o.require(worst_off <= 1e-6, "off-diagonal " + fmt(worst_off));
  o.require(secs <= 60, "runtime " + fmt(secs) + " s");
  if (o.passed) o.detail << "max |g_aa - 4m^2/(D-2)| = " << fmt(worst_diag) << ", max |g_ab| = " << fmt(worst_off)
                         << ", " << fmt(secs) << " s";
}

void normalization(Outcome& o) {
  const double inf = std::numeric_limits<double>::infinity();
  double worst = 0;
  for (int d : kDims)
    for (double m : kMasses) {
      const double a = normalization_constant(d, m);
      const double c = m / std::sqrt(d - 2.0);
      QuadratureSpec<double> spec;
      spec.split_points = {{0.0}};
      spec.scales = {4 / c};
      spec.rel_tol = 1e-12;
      // A^2 m^2 exp(-2c |x|_1) factorizes over the axes.
      const double axis = integrate_1d<double>([c](double t) { return std::exp(-2 * c * std::abs(t)); }, -inf, inf,
                                               spec)
                              .value;
      worst = std::max(worst, std::abs(a * a * m * m * std::pow(axis, d) - 1));
      if (d <= 4) {
        const auto fam = Familyd::klein_gordon(d, m);
        const auto full = integrate_rd_tensor<double>([&](const Vectord& x) { return density(fam, x); }, d,
                                                      family_quadrature_spec(fam));
        worst = std::max(worst, std::abs(full.value - 1));
      }
      const auto action = onshell_action(KleinGordonSolution<double>::normalized(d, m));
      worst = std::max(worst, std::abs(action.value + 1));
    }
  o.require(worst <= 1e-6, "max |integral - 1| = " + fmt(worst));
  if (o.passed) o.detail << "max |integral of P - 1| = " << fmt(worst);
}

void gaussian_baseline(Outcome& o) {
  double worst = 0;
  for (int d : {2, 3}) {
    const auto g = fisher_metric_quadrature(Familyd::gaussian(d)).g;
    worst = std::max(worst, (g - 2 * Matrixd::Identity(d, d)).cwiseAbs().maxCoeff());
  }
  o.require(worst <= 1e-7, "max |g - 2 delta| = " + fmt(worst));
  if (o.passed) o.detail << "max |g - 2 delta| = " << fmt(worst);
}

void moments(Outcome& o) {
  const Vectord theta = vec({0.3, -1.2, 0});
  const auto kg = Familyd::klein_gordon(3, 1.0, theta);
  double worst_mean = 0;
  for (int a = 0; a < 3; ++a) worst_mean = std::max(worst_mean, std::abs(coordinate_mean(kg, a).value - theta(a)));
  o.require(worst_mean <= 1e-6, "mean deviation " + fmt(worst_mean));

  double worst_var = 0;
  for (int d : kDims) {
    const double m = 1.0;
    const double c = m / std::sqrt(d - 2.0);
    const double oracle_v = oracle::simpson_pieces(
        [c](double t) { return t * t * oracle::laplace_marginal(t, c); }, {-60 / c, 0.0, 60 / c});
    const auto report = coordinate_variance_report(Familyd::klein_gordon(d, m, Vectord::Constant(d, 0.4)), 1);
    worst_var = std::max(worst_var, std::abs(report.measured - oracle_v));
    o.require(std::abs(oracle_v - (d - 2) / (2 * m * m)) <= 1e-9, "oracle disagrees with (D-2)/(2m^2)");
    if (d <= 4) {
      o.require(!report.discrepancy && std::abs(*report.reference_formula - oracle_v) <= 1e-6,
                "reference formula should agree at D = " + std::to_string(d));
    } else {
      o.require(report.discrepancy, "D = 5 discrepancy not flagged");
      o.require(std::abs(*report.reference_formula - std::sqrt(3.0) / 2) <= 1e-12, "D = 5 reference value");
    }
  }
  o.require(worst_var <= 1e-6, "variance deviation " + fmt(worst_var));
  if (o.passed)
    o.detail << "max |E[x] - theta| = " << fmt(worst_mean) << ", max |V - oracle| = " << fmt(worst_var)
             << ", D=5 flagged (1.5 vs 0.866)";
}

void translation(Outcome& o) {
  const auto kg = Familyd::klein_gordon(3, 1.0);
  const auto report = translation_invariance_check(kg, {Vectord::Zero(3), vec({0.3, -1.2, 0}), vec({2, 2, 2})});
  o.require(report.max_deviation <= 2e-6, "max deviation " + fmt(report.max_deviation));
  if (o.passed) o.detail << "max |g(theta) - g(0)| = " << fmt(report.max_deviation);
}

void eom(Outcome& o) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2, 2);
  const double h = 1e-3;
  double worst_rel = 0, worst_ratio = 4;
  for (int d : kDims) {
    const auto sol = KleinGordonSolution<double>::normalized(d, 1.0);
    const auto sol_ext = KleinGordonSolution<long double>::normalized(d, 1.0L);
    for (int i = 0; i < 100; ++i) {
      Vectord x(d);
      for (int a = 0; a < d; ++a) {
        do x(a) = u(rng);
        while (std::abs(x(a)) <= 0.05);
      }
      worst_rel = std::max(worst_rel, std::abs(eom_residual(sol, x, h)) / field_value(sol, x));
      // Double-precision cancellation noise is comparable to the O(h^2) term for D >= 4.
      const Vector<long double> xe = x.cast<long double>();
      const long double fine = eom_residual(sol_ext, xe, 1e-3L);
      const double ratio = static_cast<double>(eom_residual(sol_ext, xe, 2e-3L) / fine);
      if (std::abs(ratio - 4) > std::abs(worst_ratio - 4)) worst_ratio = ratio;
    }
  }
  o.require(worst_rel <= 1e-5, "residual / phi = " + fmt(worst_rel));
  o.require(std::abs(worst_ratio - 4) <= 0.4, "convergence ratio " + fmt(worst_ratio));
  if (o.passed)
    o.detail << "max |residual| / phi = " << fmt(worst_rel) << ", worst ratio " << fmt(worst_ratio)
             << " (extended precision)";
}

void cross_validation(Outcome& o) {
  const auto kg = Familyd::klein_gordon(3, 1.0);
  const auto analytic = fisher_metric_analytic(kg);
  MonteCarloSpec spec;
  spec.n_samples = 1'000'000;
  spec.seed = 2012;
  const auto mc = fisher_metric_montecarlo(kg, spec);
  const double c = 1.0;
  double worst_sigma = 0;
  for (int a = 0; a < 3; ++a) {
    o.require(mc.g(a, a) == 4 * c * c, "MC diagonal not exactly 4c^2");
    for (int b = 0; b < 3; ++b)
      if (a != b) worst_sigma = std::max(worst_sigma, std::abs(mc.g(a, b) - analytic.g(a, b)) / mc.error(a, b));
  }
  o.require(worst_sigma <= 4, "MC off-diagonal at " + fmt(worst_sigma) + " sigma");
  double worst_fd = 0;
  for (int d : kDims)
    for (double m : kMasses) {
      const auto fam = Familyd::klein_gordon(d, m);
      worst_fd = std::max(worst_fd,
                          (fisher_metric_fd_score(fam, 1e-3).g - fisher_metric_analytic(fam).g).cwiseAbs().maxCoeff());
    }
  o.require(worst_fd <= 1e-4, "FD-score deviation " + fmt(worst_fd));
  if (o.passed)
    o.detail << "MC diagonal exact, off-diagonal within " << fmt(worst_sigma) << " sigma; FD max dev " << fmt(worst_fd);
}

void curvature(Outcome& o) {
  const auto kg = Familyd::klein_gordon(3, 1.0);
  const auto analytic = sample_metric_field(centered_lattice<double>(Vectord::Zero(3), 0.25, 7),
                                            [&](const Vectord& t) { return fisher_metric_analytic(kg.with_theta(t)); });
  const auto ra = flatness_report(analytic, 1e-9);
  o.require(ra.max_abs_christoffel <= 1e-9 && ra.max_abs_riemann <= 1e-9, "analytic field not flat");

  const auto quad = sample_metric_field(centered_lattice<double>(Vectord::Zero(3), 0.25, 5),
                                        [&](const Vectord& t) { return fisher_metric_quadrature(kg.with_theta(t)); });
  const auto rq = flatness_report(quad, 1e-3);
  o.require(rq.max_abs_christoffel <= 1e-3 && rq.max_abs_riemann <= 1e-3, "quadrature field not flat");

  const double theta0 = 1.0;
  const auto sphere = round_sphere_field(centered_lattice<double>(vec({theta0, 0.5}), 0.05, 5));
  const double r = riemann(sphere, {2, 2})(0, 1, 0, 1);
  const double exact = std::sin(theta0) * std::sin(theta0);
  const double rel = std::abs(r - exact) / exact;
  o.require(rel <= 0.02, "sphere R^0_101 off by " + fmt(rel));
  if (o.passed)
    o.detail << "analytic max " << fmt(std::max(ra.max_abs_christoffel, ra.max_abs_riemann)) << ", quadrature max "
             << fmt(std::max(rq.max_abs_christoffel, rq.max_abs_riemann)) << ", sphere rel err " << fmt(rel);
}

void rescale_wick(Outcome& o) {
  for (int d = 3; d <= 6; ++d)
    for (double m : {0.5, 1.0, 2.0, 0.7}) {
      const auto n = normalize_coordinates(fisher_metric_analytic(Familyd::klein_gordon(d, m)), d, m);
      std::set<int> spatial;
      for (int a = 1; a < d; ++a) spatial.insert(a);
      const auto w = wick_rotate(n.metric, spatial);
      Vectord eta = -Vectord::Ones(d);
      eta(0) = 1;
      o.require(w.metric.g == Matrixd(eta.asDiagonal()), "not exactly eta at D = " + std::to_string(d));
      o.require(w.signature == Signature{1, d - 1, 0}, "signature at D = " + std::to_string(d));
    }
  if (o.passed) o.detail << "diag(1,-1,...,-1) exactly, signature (1, D-1, 0) for D = 3..6";
}

int binary_exit(const std::string& args) {
  const std::string cmd = std::string(INFOGEO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void d2_rejection(Outcome& o) {
  bool threw = false;
  try {
    Familyd::klein_gordon(2, 1.0);
  } catch (const DomainError&) {
    threw = true;
  }
  o.require(threw, "no domain error");
  std::ostringstream out, err;
  o.require(cli::run({"metric", "--family", "kg", "--dim", "2", "--mass", "1"}, out, err) == 2, "in-process exit");
  o.require(binary_exit("metric --family kg --dim 2 --mass 1") == 2, "binary exit");
  if (o.passed) o.detail << "DomainError; CLI exit 2";
}

void density_grid(Outcome& o) {
  std::ostringstream out, err;
  const int code = cli::run({"grid", "--dim", "3", "--mass", "1", "--theta", "0,1,0"}, out, err);
  o.require(code == 0, "grid exit " + std::to_string(code));
  if (code != 0) return;
  const auto doc = nlohmann::json::parse(out.str());
  const int n = doc["points"].get<int>();
  const double step = 2 * doc["half_width"].get<double>() / (n - 1);
  auto at = [&](int i, int j) { return doc["data"][static_cast<std::size_t>(i * n + j)]; };

  int pi = 0, pj = 0;
  double peak = -1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (at(i, j)[2].get<double>() > peak) {
        peak = at(i, j)[2].get<double>();
        pi = i;
        pj = j;
      }
  o.require(std::abs(peak - 1.0) <= 1e-12, "peak " + fmt(peak));
  o.require(std::abs(at(pi, pj)[0].get<double>()) <= step && std::abs(at(pi, pj)[1].get<double>() - 1) <= step,
            "peak location");

  // Distance from the peak to the last point still at or above peak / e.
  double worst = 0;
  const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const auto& dir : dirs) {
    int k = 0;
    while (true) {
      const int i = pi + (k + 1) * dir[0], j = pj + (k + 1) * dir[1];
      if (i < 0 || j < 0 || i >= n || j >= n || at(i, j)[2].get<double>() < peak / std::exp(1.0) * (1 - 1e-12)) break;
      ++k;
    }
    worst = std::max(worst, std::abs(k * step - 0.5));
  }
  o.require(worst <= step, "half-width off by " + fmt(worst));
  if (o.passed) o.detail << "peak " << peak << " at (0, 1), half-width 0.5 within " << fmt(worst);
}

void determinism(Outcome& o) {
  const auto kg = Familyd::klein_gordon(4, 1.0, vec({0.1, -0.2, 0.3, 0}));
  MonteCarloSpec spec;
  spec.n_samples = 300'000;
  spec.seed = 99;
  spec.workers = 1;
  const auto ref = fisher_metric_montecarlo(kg, spec);
  auto f = [](const Vectord& x) { return x(0) * x(1) + std::sin(x(2)); };
  const auto ref_e = mc_expectation(kg, f, spec);
  for (int w : {1, 2, 8}) {
    spec.workers = w;
    const auto again = fisher_metric_montecarlo(kg, spec);
    const auto again_e = mc_expectation(kg, f, spec);
    o.require(again.g == ref.g && again.error == ref.error, "metric differs at workers = " + std::to_string(w));
    o.require(again_e.value == ref_e.value && again_e.error_estimate == ref_e.error_estimate,
              "expectation differs at workers = " + std::to_string(w));
  }
  if (o.passed) o.detail << "bit-identical at 1, 2, 8 workers";
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"flat metric value", flat_metric_value},
      {"normalization constant", normalization},
      {"Gaussian baseline", gaussian_baseline},
      {"moments", moments},
      {"translation invariance", translation},
      {"EOM residual", eom},
      {"method cross-validation", cross_validation},
      {"curvature flatness", curvature},
      {"rescale + Wick", rescale_wick},
      {"D=2 rejection", d2_rejection},
      {"density grid", density_grid},
      {"determinism", determinism},
  };
  int failures = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.passed) ++failures;
    std::cout << (o.passed ? "PASS" : "FAIL") << "  " << index << ". " << name << ": " << o.detail.str() << '\n';
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << (12 - failures) << "/12\n";
  return failures ? 1 : 0;
}
