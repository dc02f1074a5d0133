#include <charconv>
#include <fstream>
#include <sstream>

#include "cli/serialize.hpp"

namespace infogeo::cli {

namespace {

Json matrix_json(const Matrixd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrixd matrix_from(const Json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw UsageError(std::string("'") + key + "' must be a non-empty matrix");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrixd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw UsageError(std::string("'") + key + "' must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) {
    const auto text = v.get<std::string>();
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return quoted + "\"";
  }
  return v.dump();
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json metric_to_json(const MetricResult<double>& metric, const RunConfig& config) {
  Json j;
  j["family"] = std::string(to_string(config.family));
  j["dim"] = config.dim;
  if (config.family == FamilyKind::KleinGordonOnShell)
    j["mass"] = config.mass;
  else
    j["mass"] = nullptr;
  const Vectord theta = config.theta_vector();
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  if (config.family == FamilyKind::LaplaceProduct) {
    j["rates"] = config.rates.empty() ? std::vector<double>(static_cast<std::size_t>(config.dim), 1.0) : config.rates;
  }
  j["method"] = std::string(to_string(metric.method));
  j["g"] = matrix_json(metric.g);
  j["g_error"] = matrix_json(metric.error);
  j["unconverged"] = metric.unconverged;
  if (metric.seed)
    j["seed"] = *metric.seed;
  else
    j["seed"] = nullptr;
  if (metric.method == MetricMethod::montecarlo) j["samples"] = config.montecarlo.n_samples;
  j["tool_version"] = kVersion;
  return j;
}

std::string metric_to_csv(const MetricResult<double>& metric, const RunConfig& config) {
  Table t;
  std::vector<Json> row;
  t.header = {"family", "dim", "mass", "method", "unconverged", "seed", "tool_version"};
  row.push_back(std::string(to_string(config.family)));
  row.push_back(config.dim);
  row.push_back(config.family == FamilyKind::KleinGordonOnShell ? Json(config.mass) : Json());
  row.push_back(std::string(to_string(metric.method)));
  row.push_back(metric.unconverged);
  row.push_back(metric.seed ? Json(*metric.seed) : Json());
  row.push_back(kVersion);
  const Vectord theta = config.theta_vector();
  for (Eigen::Index a = 0; a < theta.size(); ++a) {
    t.header.push_back("theta_" + std::to_string(a));
    row.push_back(theta(a));
  }
  for (const char* name : {"g", "g_error"}) {
    const Matrixd& m = std::string(name) == "g" ? metric.g : metric.error;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        t.header.push_back(std::string(name) + "_" + std::to_string(i) + "_" + std::to_string(k));
        row.push_back(m(i, k));
      }
  }
  t.rows.push_back(std::move(row));
  return t.to_csv();
}

MetricResult<double> metric_from_json(const Json& doc, RunConfig& config) {
  if (!doc.is_object()) throw UsageError("metric document must be a JSON object");
  for (const char* key : {"family", "dim", "theta", "method", "g", "g_error"})
    if (!doc.contains(key)) throw UsageError(std::string("metric document lacks '") + key + "'");
  try {
    const auto family = parse_family_kind(doc["family"].get<std::string>());
    const auto method = parse_metric_method(doc["method"].get<std::string>());
    if (!family || !method) throw UsageError("metric document has an unknown family or method");
    config.family = *family;
    config.method = *method;
    config.dim = doc["dim"].get<int>();
    if (doc.contains("mass") && !doc["mass"].is_null()) config.mass = doc["mass"].get<double>();
    config.theta = doc["theta"].get<std::vector<double>>();
    config.rates.clear();
    if (doc.contains("rates") && !doc["rates"].is_null()) config.rates = doc["rates"].get<std::vector<double>>();

    MetricResult<double> r;
    r.g = matrix_from(doc["g"], "g");
    r.error = matrix_from(doc["g_error"], "g_error");
    r.method = *method;
    r.unconverged = doc.value("unconverged", false);
    if (doc.contains("seed") && !doc["seed"].is_null()) {
      r.seed = doc["seed"].get<std::uint64_t>();
      config.montecarlo.seed = *r.seed;
    }
    if (doc.contains("samples")) config.montecarlo.n_samples = doc["samples"].get<std::int64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed metric document: ") + e.what());
  }
}

Json Table::to_json() const {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json obj;
    for (std::size_t i = 0; i < header.size() && i < row.size(); ++i) obj[header[i]] = row[i];
    out.push_back(std::move(obj));
  }
  return out;
}

std::string Table::to_csv() const {
  std::ostringstream s;
  for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
  s << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << csv_cell(row[i]);
    s << '\n';
  }
  return s.str();
}

void emit(const RunConfig& config, const std::string& text, std::ostream& out) {
  if (config.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(config.out);
  if (!file) throw UsageError("cannot write '" + config.out + "'");
  file << text;
  if (!file) throw UsageError("failed writing '" + config.out + "'");
}

}  // namespace infogeo::cli
