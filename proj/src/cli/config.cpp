#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/cli.hpp"

namespace infogeo::cli {

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    T v{};
    const char* first = item.data();
    if (!item.empty() && item[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw UsageError(flag + ": cannot parse '" + item + "' in '" + text + "'");
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

FamilyKind family_from(const std::string& s) {
  if (auto k = parse_family_kind(s)) return *k;
  throw UsageError("--family must be one of kg, gaussian, laplace (got '" + s + "')");
}

MetricMethod method_from(const std::string& s) {
  if (auto m = parse_metric_method(s)) return *m;
  throw UsageError("--method must be one of analytic, quadrature, montecarlo, fdscore (got '" + s + "')");
}

OutputFormat format_from(const std::string& s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw UsageError("--format must be json or csv (got '" + s + "')");
}

std::vector<double> number_list(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return parse_list<double>(v.get<std::string>(), key);
  if (!v.is_array()) throw UsageError("config key '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw UsageError("config key '" + key + "' must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

Vectord RunConfig::theta_vector() const {
  if (theta.empty()) return Vectord::Zero(dim);
  return Eigen::Map<const Vectord>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

void RunConfig::validate() const {
  if (dim < 1) throw UsageError("--dim must be a positive integer");
  if (!(mass > 0) || !std::isfinite(mass)) throw UsageError("--mass must be a positive number");
  if (!theta.empty() && static_cast<int>(theta.size()) != dim) {
    std::ostringstream msg;
    msg << "--theta has " << theta.size() << " entries, expected " << dim;
    throw UsageError(msg.str());
  }
  for (double t : theta)
    if (!std::isfinite(t)) throw UsageError("--theta entries must be finite");
  if (!rates.empty()) {
    if (family != FamilyKind::LaplaceProduct) throw UsageError("--rates applies to --family laplace only");
    if (static_cast<int>(rates.size()) != dim) {
      std::ostringstream msg;
      msg << "--rates has " << rates.size() << " entries, expected " << dim;
      throw UsageError(msg.str());
    }
  }
  if (montecarlo.n_samples < 1) throw UsageError("--samples must be >= 1");
  if (!(quadrature.rel_tol > 0) || !(quadrature.abs_tol > 0)) throw UsageError("tolerances must be positive");
  if (quadrature.max_subdivisions < 1) throw UsageError("--max-subdivisions must be >= 1");
  if (workers < 0) throw UsageError("--workers must be >= 0");
  if (!(amplitude_scale > 0)) throw UsageError("--amplitude-scale must be positive");

  if (command == "table") {
    if (family != FamilyKind::KleinGordonOnShell) throw UsageError("table is defined for --family kg only");
    if (dims.empty() || masses.empty()) throw UsageError("table needs at least one dimension and one mass");
    for (int d : dims)
      if (d < 3 || d > 6) throw UsageError("--dims entries must lie in [3, 6]");
    for (double m : masses)
      if (!(m > 0)) throw UsageError("--masses entries must be positive");
  }
  if (command == "grid") {
    if (dim < 2) throw UsageError("grid needs --dim >= 2");
    for (int a : axes)
      if (a < 0 || a >= dim) throw UsageError("--axes entries must lie in [0, D)");
    if (axes[0] == axes[1]) throw UsageError("--axes must name two different axes");
    if (!(half_width > 0)) throw UsageError("--half-width must be positive");
    if (points < 3) throw UsageError("--points must be >= 3");
  }
  if (command == "moments" && method == MetricMethod::finite_difference_score)
    throw UsageError("moments support --method analytic, quadrature or montecarlo");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");

  // Output-only keys are accepted so a metric result can seed a rerun.
  static const std::set<std::string> ignored{"g", "g_error", "unconverged", "tool_version", "command"};
  try {
    for (const auto& [key, v] : j.items()) {
      if (v.is_null() || ignored.count(key)) continue;
      if (key == "family") config.family = family_from(v.get<std::string>());
      else if (key == "dim") config.dim = v.get<int>();
      else if (key == "mass") config.mass = v.get<double>();
      else if (key == "theta") config.theta = number_list(v, key);
      else if (key == "rates") config.rates = number_list(v, key);
      else if (key == "method") config.method = method_from(v.get<std::string>());
      else if (key == "samples") config.montecarlo.n_samples = v.get<std::int64_t>();
      else if (key == "seed") config.montecarlo.seed = v.get<std::uint64_t>();
      else if (key == "rel_tol") config.quadrature.rel_tol = v.get<double>();
      else if (key == "abs_tol") config.quadrature.abs_tol = v.get<double>();
      else if (key == "max_subdivisions") config.quadrature.max_subdivisions = v.get<int>();
      else if (key == "format") config.format = format_from(v.get<std::string>());
      else if (key == "out") config.out = v.get<std::string>();
      else if (key == "workers") config.workers = v.get<int>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
}

RunConfig parse_arguments(const std::vector<std::string>& args, std::string* help_text) {
  CLI::App app{"Fisher metric of probability densities built from Klein-Gordon solutions", "infogeo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string family, method, format, out, config_path, theta, rates;
  int dim = 0, max_subdivisions = 0, workers = 0;
  double mass = 0, rel_tol = 0, abs_tol = 0, amplitude_scale = 1;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;

  auto* o_family = app.add_option("--family", family, "kg, gaussian or laplace (default kg)");
  auto* o_dim = app.add_option("--dim", dim, "dimension D (default 3)");
  auto* o_mass = app.add_option("--mass", mass, "mass m (default 1)");
  auto* o_theta = app.add_option("--theta", theta, "comma-separated location parameter (default 0)");
  auto* o_rates = app.add_option("--rates", rates, "comma-separated Laplace rates");
  auto* o_method = app.add_option("--method", method, "analytic, quadrature, montecarlo or fdscore");
  auto* o_samples = app.add_option("--samples", samples, "Monte Carlo sample count");
  auto* o_seed = app.add_option("--seed", seed, "Monte Carlo seed");
  auto* o_rel = app.add_option("--rel-tol", rel_tol, "quadrature relative tolerance");
  auto* o_abs = app.add_option("--abs-tol", abs_tol, "quadrature absolute tolerance");
  auto* o_sub = app.add_option("--max-subdivisions", max_subdivisions, "adaptive quadrature subdivision budget");
  auto* o_format = app.add_option("--format", format, "json or csv");
  auto* o_out = app.add_option("--out", out, "output file (default standard output)");
  auto* o_workers = app.add_option("--workers", workers, "threads for parallel integration (0 = all cores)");
  app.add_option("--config", config_path, "JSON file with defaults for the options above");
  auto* o_amp = app.add_option("--amplitude-scale", amplitude_scale)->group("");

  auto* metric = app.add_subcommand("metric", "Fisher metric at theta")->fallthrough();
  auto* moments = app.add_subcommand("moments", "means and variances of the coordinates")->fallthrough();
  auto* verify = app.add_subcommand("verify", "run the invariant checks")->fallthrough();
  auto* table = app.add_subcommand("table", "closed forms and quadrature across (D, m)")->fallthrough();
  auto* grid = app.add_subcommand("grid", "density on a two-dimensional slice")->fallthrough();
  (void)metric;
  (void)moments;

  std::string against, dims, masses, axes;
  double half_width = 0;
  int points = 0;
  verify->add_option("--against", against, "metric JSON to reproduce exactly");
  auto* o_dims = table->add_option("--dims", dims, "comma-separated dimensions (default 3,4,5,6)");
  auto* o_masses = table->add_option("--masses", masses, "comma-separated masses (default 0.5,1,2)");
  auto* o_axes = grid->add_option("--axes", axes, "two comma-separated axes (default 0,1)");
  auto* o_half = grid->add_option("--half-width", half_width, "half extent of the grid (default 3)");
  auto* o_points = grid->add_option("--points", points, "points per axis (default 121)");

  RunConfig config;
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    if (help_text) *help_text = app.help();
    config.command = "help";
    return config;
  } catch (const CLI::CallForAllHelp&) {
    if (help_text) *help_text = app.help("", CLI::AppFormatMode::All);
    config.command = "help";
    return config;
  } catch (const CLI::CallForVersion&) {
    if (help_text) *help_text = std::string(kVersion) + "\n";
    config.command = "help";
    return config;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  config.command = app.get_subcommands().front()->get_name();
  if (!config_path.empty()) apply_config_file(config, config_path);

  if (o_family->count()) config.family = family_from(family);
  if (o_dim->count()) config.dim = dim;
  if (o_mass->count()) config.mass = mass;
  if (o_theta->count()) config.theta = parse_list<double>(theta, "--theta");
  if (o_rates->count()) config.rates = parse_list<double>(rates, "--rates");
  if (o_method->count()) config.method = method_from(method);
  if (o_samples->count()) config.montecarlo.n_samples = samples;
  if (o_seed->count()) config.montecarlo.seed = seed;
  if (o_rel->count()) config.quadrature.rel_tol = rel_tol;
  if (o_abs->count()) config.quadrature.abs_tol = abs_tol;
  if (o_sub->count()) config.quadrature.max_subdivisions = max_subdivisions;
  if (o_format->count()) config.format = format_from(format);
  if (o_out->count()) config.out = out;
  if (o_workers->count()) config.workers = workers;
  if (o_amp->count()) config.amplitude_scale = amplitude_scale;
  config.against = against;
  if (o_dims->count()) config.dims = parse_list<int>(dims, "--dims");
  if (o_masses->count()) config.masses = parse_list<double>(masses, "--masses");
  if (o_axes->count()) {
    const auto a = parse_list<int>(axes, "--axes");
    if (a.size() != 2) throw UsageError("--axes takes exactly two entries");
    config.axes = {a[0], a[1]};
  }
  if (o_half->count()) config.half_width = half_width;
  if (o_points->count()) config.points = points;

  config.quadrature.workers = config.workers;
  config.montecarlo.workers = config.workers;
  return config;
}

Familyd make_family(const RunConfig& config) {
  const Vectord theta = config.theta_vector();
  switch (config.family) {
    case FamilyKind::KleinGordonOnShell: return Familyd::klein_gordon(config.dim, config.mass, theta);
    case FamilyKind::IsotropicGaussian: return Familyd::gaussian(config.dim, theta);
    case FamilyKind::LaplaceProduct: {
      const Vectord rates = config.rates.empty()
                                ? Vectord(Vectord::Ones(config.dim))
                                : Vectord(Eigen::Map<const Vectord>(config.rates.data(), config.dim));
      return Familyd::laplace_product(rates, theta);
    }
  }
  throw UsageError("unknown family");
}

}  // namespace infogeo::cli
