#ifndef POLICYBOUNDS_RUNNER_HPP
#define POLICYBOUNDS_RUNNER_HPP

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>

#include "policybounds/dataset.hpp"
#include "policybounds/model.hpp"
#include "policybounds/report.hpp"

namespace policybounds::runner {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

// process exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitModelRejected = 2;
inline constexpr int kExitInputError = 3;
inline constexpr int kExitNumericalFailure = 4;

struct InferenceSettings {
  bool enabled = false;
  double level_cells = 0.99;
  double level_agg = 0.96;
  double level_universal = 0.95;
  double level_first = 0.955;
  double level_second = 0.995;
  int draws = 20000;
  int grid_n = 100;
  bool pc_effect = false;
  std::optional<std::uint64_t> seed;  // mandatory once enabled
};

struct CalibrateSettings {
  std::optional<double> rho;
  std::optional<double> dp_bar;
  std::optional<double> od_bar;
  std::optional<double> delta_te;
  double quota = 0.5;
  std::string pair_stats_path;
  bool divide_by_quota = false;
};

struct RunConfig {
  std::string subcommand;
  std::string dataset_path;
  dataset::ParseOptions dataset_opts;
  long pool_min_cases = 0;  // 0 disables pooling
  PolicySpec policy;
  RestrictionSet restrictions;
  InferenceSettings inference;
  CalibrateSettings calibrate;
  report::OutputFormat output_format = report::OutputFormat::Json;
  double oracle_tol = 1e-6;

  /// Parses and validates the declarative config document. Throws
  /// std::invalid_argument with the offending key in the message.
  static RunConfig from_json(const nlohmann::json& doc);
};

struct RunResult {
  nlohmann::json report;
  int exit_code = kExitOk;
};

/// Dispatches one subcommand (bounds, pc-effect, universal-release, quota,
/// calibrate-dp, infer, oracle-check) and assembles the report document.
/// Timings are recorded under "timings" and stripped by canonical JSON
/// emission so identical config + seed gives byte-identical output.
RunResult run(const RunConfig& config);

/// Serializes the report in the configured format; JSON output drops the
/// volatile timings section.
std::string render(const RunResult& result, report::OutputFormat format);

}  // namespace policybounds::runner

#endif  // POLICYBOUNDS_RUNNER_HPP
