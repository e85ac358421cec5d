#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "esp/config.hpp"

namespace esp {

inline constexpr const char* kToolVersion = "0.1.0";
// Output root resolution order: explicit --out flag, this env var, ./runs.
inline constexpr const char* kOutRootEnv = "ESP_OUT_ROOT";

struct RunOutcome {
  std::filesystem::path dir;
  RunResult result;
  bool skipped = false;  // run directory already complete and force was off
};

// Executes a config end to end and writes config.json, metrics.json,
// accuracy_matrix.csv, timing.csv and (for ESP) pf_log.csv under
// out_root/run-<hash>-s<seed>. metrics.json holds only seed-deterministic
// values; wall-clock numbers live in timing.csv.
RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_root,
                          bool force);

struct SweepOptions {
  std::vector<std::string> methods;
  std::vector<double> fractions;
  std::size_t seeds = 3;  // consecutive seeds starting at the config's
};

struct SweepCell {
  std::string method;
  double fraction = 0.0;
  std::vector<double> per_seed;  // average accuracy per seed
  std::string error;             // non-empty if the cell failed

  bool failed() const { return !error.empty(); }
  double mean() const;
};

struct SweepResult {
  std::vector<std::string> methods;
  std::vector<double> fractions;
  std::vector<SweepCell> cells;  // methods-major order

  const SweepCell& cell(std::size_t method_index, std::size_t fraction_index) const;
};

SweepResult run_sweep(const ExperimentConfig& base, const SweepOptions& options);

struct PfReport {
  std::size_t block_count = 0;
  std::vector<double> overall_mean;  // per block, across all tasks and steps
  std::vector<std::pair<std::size_t, std::vector<double>>> per_task;
};

PfReport compute_pf_report(const std::filesystem::path& run_dir);

struct TimeReportRow {
  std::string method;
  double backbone_seconds = 0.0;
  double regularizer_seconds = 0.0;
};

std::vector<TimeReportRow> compute_time_report(const std::vector<std::filesystem::path>& run_dirs);

// CLI entry points; validation failures exit 2, runtime failures 1.
int run_command(const std::string& config_path, const std::string& out_root, bool force,
                std::ostream& out, std::ostream& err);
int sweep_command(const std::string& config_path, const SweepOptions& options,
                  const std::string& out_root, std::ostream& out, std::ostream& err);
int report_pf_command(const std::string& run_dir, std::ostream& out, std::ostream& err);
int report_time_command(const std::vector<std::string>& run_dirs, std::ostream& out,
                        std::ostream& err);

std::filesystem::path resolve_out_root(const std::string& flag_value);

}  // namespace esp
