#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hettrim/dataset.hpp"
#include "hettrim/regressor.hpp"
#include "hettrim/simharness.hpp"
#include "hettrim/simultaneous.hpp"
#include "hettrim/trimming.hpp"

namespace hettrim {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a CLI run needs. Populated from a `key = value` file and flag
/// overrides; see set_config_value for the key list.
struct AnalysisConfig {
  std::string input_path;
  std::string response_column = "y";
  std::string treatment_column = "z";
  /// Empty means every column other than the response and treatment, in file order.
  std::vector<std::string> covariate_columns;
  RegressorSpec nuisance;
  int folds = 5;
  std::pair<double, double> prop_clip{0.01, 0.99};
  double variance_floor_rel = 1e-6;
  std::vector<TrimSpec> trims{TrimSpec{}};
  std::optional<SimulConfig> simul;
  KhatMode simul_mode = KhatMode::heteroscedastic;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output_path;
  std::string format = "json";

  // trim-path subcommand
  std::vector<double> path_deltas{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  KhatMode path_mode = KhatMode::heteroscedastic;

  // simulate subcommand
  CoverageConfig sim;
};

/// Applies one `key = value` setting. Throws ValidationError on unknown keys
/// or unparsable values.
void set_config_value(AnalysisConfig& cfg, const std::string& key, const std::string& value);

/// Parses a config file body. Blank lines and lines starting with '#' are
/// ignored; `schema_version = 1` is required.
AnalysisConfig parse_config(std::istream& in);
AnalysisConfig load_config(const std::string& path);

/// The simulate subcommand's study settings: cfg.sim with the nuisance spec,
/// seed, alpha, clip, variance floor and threads taken from the top level.
CoverageConfig coverage_config(const AnalysisConfig& cfg);

/// Canonical key/value echo of the configuration.
std::map<std::string, std::string> config_echo(const AnalysisConfig& cfg);

/// Cross-field checks (clip ordering, alpha range, folds >= 1, ...).
void validate(const AnalysisConfig& cfg);

struct IngestedData {
  Dataset data;
  std::vector<std::string> covariate_names;
};

/// Reads a comma-separated file with a header row. Errors name the 1-based data
/// row (the header is row 0) and the column.
IngestedData ingest_csv(const std::string& path, const AnalysisConfig& cfg);
IngestedData ingest_csv(std::istream& in, const AnalysisConfig& cfg);

struct RuleResult {
  std::string mode;
  std::string rule;
  std::optional<double> delta;  // fraction rule only
  double gamma_hat = 0.0;
  Eigen::Index n_retained = 0;
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;

  bool operator==(const RuleResult&) const = default;
};

struct SimulBlock {
  std::string mode;
  double alpha = 0.05;
  int B = 0;
  double q = 0.0;
  int effective_b = 0;
  int skipped_b = 0;
  std::vector<SimulRow> rows;

  bool operator==(const SimulBlock&) const = default;
};

struct Diagnostics {
  double e_raw_min = 0.0;
  double e_raw_max = 0.0;
  double variance_floor = 0.0;
  int n_floored_var0 = 0;
  int n_floored_var1 = 0;
  std::vector<int> fold_sizes;

  bool operator==(const Diagnostics&) const = default;
};

struct AnalysisReport {
  std::map<std::string, std::string> config;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::vector<std::string> covariate_columns;
  std::vector<RuleResult> results;
  std::optional<SimulBlock> simultaneous;
  Diagnostics diagnostics;

  bool operator==(const AnalysisReport&) const = default;
};

bool operator==(const SimulRow& a, const SimulRow& b);

/// ingest -> cross-fit -> k -> each configured rule -> AIPW estimate and CI ->
/// optional simultaneous block. Errors carry the failing stage as a prefix.
AnalysisReport run_analysis(const AnalysisConfig& cfg);
AnalysisReport run_analysis(const AnalysisConfig& cfg, const IngestedData& input);

/// Fraction-rule path over cfg.path_deltas.
std::vector<TrimPathRow> run_trim_path(const AnalysisConfig& cfg);

enum class ReportFormat { json, csv };
ReportFormat report_format_from_string(const std::string& name);

std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);
std::string report_to_csv(const AnalysisReport& report);
std::string trim_path_to_csv(const std::vector<TrimPathRow>& rows);
std::string trim_path_to_json(const std::vector<TrimPathRow>& rows);
std::string coverage_to_csv(const CoverageReport& report);
std::string coverage_to_json(const CoverageReport& report);

/// Writes the report in `format` to `path`, or to stdout when path is empty or "-".
void emit_report(const AnalysisReport& report, ReportFormat format, const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace hettrim
