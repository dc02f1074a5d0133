#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "infogeo/infogeo.hpp"

namespace infogeo::cli {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitUnconverged = 3 };

enum class OutputFormat { json, csv };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  FamilyKind family = FamilyKind::KleinGordonOnShell;
  int dim = 3;
  double mass = 1.0;
  std::vector<double> theta;  ///< empty means the origin
  std::vector<double> rates;  ///< Laplace product only; empty means all ones
  MetricMethod method = MetricMethod::quadrature;
  QuadratureSpec<double> quadrature;
  MonteCarloSpec montecarlo;
  OutputFormat format = OutputFormat::json;
  std::string out;  ///< empty writes to the output stream
  int workers = 0;
  double amplitude_scale = 1.0;

  std::string against;
  std::vector<int> dims{3, 4, 5, 6};
  std::vector<double> masses{0.5, 1.0, 2.0};
  std::array<int, 2> axes{0, 1};
  double half_width = 3.0;
  int points = 121;

  Vectord theta_vector() const;
  void validate() const;
};

/// Parses a full argument list (without the program name). Throws
/// UsageError on malformed input. Help requests set `command` to "help".
RunConfig parse_arguments(const std::vector<std::string>& args, std::string* help_text = nullptr);

/// Reads a JSON config file whose keys mirror the flag names.
void apply_config_file(RunConfig& config, const std::string& path);

Familyd make_family(const RunConfig& config);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace infogeo::cli
