#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2m/cli/config.hpp"

namespace l2m::cli {

/// Version string of the report schema; bumped on incompatible changes.
inline constexpr int kSchemaVersion = 1;

/// Exit statuses of the batch runner.
enum ExitCode : int { kExitPass = 0, kExitUsage = 1, kExitCheckFailed = 2 };

/// One verdict in a run report.
struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;      // the measured quantity compared against the threshold
  double threshold = 0.0;
  nlohmann::json detail = nlohmann::json::object();  // worst node, margins, counts
};

/// Result of executing one experiment.
struct RunReport {
  nlohmann::json report;  // full report document (as written to disk)
  std::vector<Check> checks;
  std::string report_path;  // empty when no output directory was given
  int exit_code() const;
};

/// Execute one experiment. When `out_dir` is nonempty the report JSON
/// (`<name>.report.json`) and CSV artifacts are written there.
/// Throws ConfigError for invalid parameters and std::runtime_error for IO errors.
RunReport run(const ExperimentConfig& cfg, const std::string& out_dir);

/// Merge the plot data of the given report files into one tidy CSV.
/// Family reports contribute rows t_re,t_im,logB,levi_min; kernel reports
/// contribute x_re,x_im,value; mixing the two kinds is an error.
/// Throws std::runtime_error on missing/unreadable files or an empty list.
std::string emit_plotdata(const std::vector<std::string>& report_paths);

/// Command-line entry point; returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace l2m::cli
