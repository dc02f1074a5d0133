#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/cli.hpp"

namespace infogeo::cli {

using Json = nlohmann::ordered_json;

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

Json metric_to_json(const MetricResult<double>& metric, const RunConfig& config);
std::string metric_to_csv(const MetricResult<double>& metric, const RunConfig& config);

/// Inverse of metric_to_json. Fills the family fields of `config` from the
/// document and returns the stored metric.
MetricResult<double> metric_from_json(const Json& doc, RunConfig& config);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;

  Json to_json() const;
  std::string to_csv() const;
};

/// Writes to `config.out` when set, otherwise to `out`.
void emit(const RunConfig& config, const std::string& text, std::ostream& out);

}  // namespace infogeo::cli
