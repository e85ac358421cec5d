#include "esp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "esp/checkpoint.hpp"
#include "esp/errors.hpp"

namespace esp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest round-trip representation, so identical doubles always print the
// same bytes.
std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << contents;
  if (!out) throw ParseError("write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_csv_double(const std::string& token, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": bad number '" +
                     token + "'");
  }
  return v;
}

std::string accuracy_matrix_csv(const RunResult& result) {
  std::ostringstream out;
  const std::size_t tasks = result.accuracy_matrix.size();
  out << "after_task";
  for (std::size_t j = 0; j < tasks; ++j) out << ",eval_task_" << j;
  out << "\n";
  for (std::size_t t = 0; t < tasks; ++t) {
    out << t;
    for (double a : result.accuracy_matrix[t]) out << "," << format_double(a);
    out << "\n";
  }
  return out.str();
}

std::string pf_log_csv(const RunResult& result) {
  std::ostringstream out;
  out << "task_id,step,block_index,entropy,pf,frozen_flag\n";
  for (const PfLogRow& row : result.pf_log) {
    out << row.task_id << "," << row.step << "," << row.block_index << ","
        << format_double(row.entropy) << "," << format_double(row.pf) << ","
        << (row.frozen ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string timing_csv(const RunResult& result, const std::string& method) {
  std::ostringstream out;
  out << "task_id,method,backbone_seconds,regularizer_seconds\n";
  for (const TaskTiming& row : result.timing) {
    out << row.task_id << "," << method << "," << format_double(row.backbone_seconds) << ","
        << format_double(row.regularizer_seconds) << "\n";
  }
  return out.str();
}

json metrics_json(const ExperimentConfig& config, const RunResult& result) {
  json j;
  j["tool_version"] = kToolVersion;
  j["config"] = config_to_json(config);
  j["average_accuracy"] = result.average_accuracy;
  j["forgetting"] = result.forgetting;
  j["accuracy_matrix"] = result.accuracy_matrix;
  // Wall-clock numbers stay out of this file so identical runs stay
  // byte-identical; timing.csv holds them.
  json artifacts;
  artifacts["accuracy_matrix"] = "accuracy_matrix.csv";
  artifacts["timing"] = "timing.csv";
  artifacts["checkpoint"] = "model.ckpt";
  if (config.run.method == Method::kEsp) artifacts["pf_log"] = "pf_log.csv";
  j["artifacts"] = artifacts;
  return j;
}

ExperimentConfig config_with_overrides(const ExperimentConfig& base, const std::string& method,
                                       double fraction, std::uint64_t seed) {
  json j = config_to_json(base);
  j["method"] = method;
  j["replay_fraction"] = fraction;
  j["seed"] = seed;
  return parse_experiment_config(j);
}

constexpr const char* kIncompleteMarker = "INCOMPLETE";

}  // namespace

double SweepCell::mean() const {
  double sum = 0.0;
  for (double v : per_seed) sum += v;
  return per_seed.empty() ? 0.0 : sum / static_cast<double>(per_seed.size());
}

const SweepCell& SweepResult::cell(std::size_t method_index, std::size_t fraction_index) const {
  return cells.at(method_index * fractions.size() + fraction_index);
}

RunOutcome run_experiment(const ExperimentConfig& config, const fs::path& out_root, bool force) {
  RunOutcome outcome;
  outcome.dir = out_root / ("run-" + config_hash(config) + "-s" + std::to_string(config.run.seed));
  const bool complete =
      fs::exists(outcome.dir / "metrics.json") && !fs::exists(outcome.dir / kIncompleteMarker);
  if (complete && !force) {
    outcome.skipped = true;
    return outcome;
  }
  fs::create_directories(outcome.dir);
  write_file(outcome.dir / kIncompleteMarker, "run in progress or aborted\n");
  write_file(outcome.dir / "config.json", config_to_json(config).dump(2) + "\n");

  const TaskStream stream = build_stream(config);
  outcome.result = run_sequence(stream, config.run);

  write_file(outcome.dir / "metrics.json", metrics_json(config, outcome.result).dump(2) + "\n");
  write_file(outcome.dir / "accuracy_matrix.csv", accuracy_matrix_csv(outcome.result));
  write_file(outcome.dir / "timing.csv",
             timing_csv(outcome.result, method_name(config.run.method)));
  save_checkpoint(outcome.result.network, (outcome.dir / "model.ckpt").string());
  if (config.run.method == Method::kEsp) {
    write_file(outcome.dir / "pf_log.csv", pf_log_csv(outcome.result));
  }
  fs::remove(outcome.dir / kIncompleteMarker);
  return outcome;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepOptions& options) {
  if (options.methods.empty() || options.fractions.empty() || options.seeds == 0) {
    throw ConfigError("sweep: methods, fractions and seeds must all be non-empty");
  }
  SweepResult result;
  result.methods = options.methods;
  result.fractions = options.fractions;
  for (const std::string& method : options.methods) {
    for (double fraction : options.fractions) {
      SweepCell cell;
      cell.method = method;
      cell.fraction = fraction;
      try {
        for (std::size_t i = 0; i < options.seeds; ++i) {
          const ExperimentConfig config =
              config_with_overrides(base, method, fraction, base.run.seed + i);
          const TaskStream stream = build_stream(config);
          cell.per_seed.push_back(run_sequence(stream, config.run).average_accuracy);
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.per_seed.clear();
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

PfReport compute_pf_report(const fs::path& run_dir) {
  const fs::path log_path = run_dir / "pf_log.csv";
  std::ifstream in(log_path);
  if (!in) throw ParseError("report-pf: missing log " + log_path.string());
  std::string line;
  std::getline(in, line);  // header
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<std::size_t>>> per_task;
  std::vector<double> overall_sum;
  std::vector<std::size_t> overall_count;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw ParseError(log_path.string() + ": line " + std::to_string(line_no) +
                       ": expected 6 fields");
    }
    const auto task_id =
        static_cast<std::size_t>(parse_csv_double(fields[0], log_path, line_no));
    const auto block =
        static_cast<std::size_t>(parse_csv_double(fields[2], log_path, line_no));
    const double pf = parse_csv_double(fields[4], log_path, line_no);
    if (overall_sum.size() <= block) {
      overall_sum.resize(block + 1, 0.0);
      overall_count.resize(block + 1, 0);
    }
    overall_sum[block] += pf;
    overall_count[block] += 1;
    auto& [task_sum, task_count] = per_task[task_id];
    if (task_sum.size() <= block) {
      task_sum.resize(block + 1, 0.0);
      task_count.resize(block + 1, 0);
    }
    task_sum[block] += pf;
    task_count[block] += 1;
  }
  if (overall_sum.empty()) throw ParseError("report-pf: " + log_path.string() + " has no rows");

  PfReport report;
  report.block_count = overall_sum.size();
  report.overall_mean.resize(report.block_count, 0.0);
  for (std::size_t b = 0; b < report.block_count; ++b) {
    report.overall_mean[b] =
        overall_count[b] > 0 ? overall_sum[b] / static_cast<double>(overall_count[b]) : 0.0;
  }
  for (auto& [task_id, sums] : per_task) {
    std::vector<double> means(sums.first.size(), 0.0);
    for (std::size_t b = 0; b < means.size(); ++b) {
      means[b] = sums.second[b] > 0 ? sums.first[b] / static_cast<double>(sums.second[b]) : 0.0;
    }
    report.per_task.emplace_back(task_id, std::move(means));
  }
  return report;
}

std::vector<TimeReportRow> compute_time_report(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.empty()) throw ConfigError("report-time: no run directories given");
  std::vector<TimeReportRow> rows;
  for (const fs::path& dir : run_dirs) {
    const fs::path timing_path = dir / "timing.csv";
    std::ifstream in(timing_path);
    if (!in) throw ParseError("report-time: missing log " + timing_path.string());
    std::string line;
    std::getline(in, line);  // header
    TimeReportRow row;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 4) {
        throw ParseError(timing_path.string() + ": line " + std::to_string(line_no) +
                         ": expected 4 fields");
      }
      row.method = fields[1];
      row.backbone_seconds += parse_csv_double(fields[2], timing_path, line_no);
      row.regularizer_seconds += parse_csv_double(fields[3], timing_path, line_no);
    }
    if (row.method.empty()) {
      throw ParseError("report-time: " + timing_path.string() + " has no rows");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path resolve_out_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutRootEnv); env != nullptr && env[0] != '\0') return env;
  return "runs";
}

int run_command(const std::string& config_path, const std::string& out_root, bool force,
                std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_experiment_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const RunOutcome outcome = run_experiment(config, resolve_out_root(out_root), force);
    if (outcome.skipped) {
      out << "run already complete: " << outcome.dir.string() << " (use --force to redo)\n";
      return 0;
    }
    out << "run dir: " << outcome.dir.string() << "\n";
    out << "average accuracy: " << format_double(outcome.result.average_accuracy) << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return 1;
  }
}

int sweep_command(const std::string& config_path, const SweepOptions& options,
                  const std::string& out_root, std::ostream& out, std::ostream& err) {
  ExperimentConfig base;
  SweepResult sweep;
  try {
    base = load_experiment_config(config_path);
    if (options.methods.empty()) throw ConfigError("sweep: --methods must not be empty");
    if (options.fractions.empty()) throw ConfigError("sweep: --fractions must not be empty");
    for (const auto& m : options.methods) method_from_name(m);
    for (double f : options.fractions) {
      if (f < 0.0 || f > 1.0) throw ConfigError("sweep: fractions must be within [0, 1]");
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    sweep = run_sweep(base, options);
  } catch (const std::exception& e) {
    err << "sweep failed: " << e.what() << "\n";
    return 1;
  }

  // Aligned text table, methods down, fractions across.
  std::ostringstream text;
  text << std::left << std::setw(12) << "method";
  for (double f : sweep.fractions) {
    std::ostringstream head;
    head << "r=" << f;
    text << std::right << std::setw(10) << head.str();
  }
  text << "\n";
  std::ostringstream csv;
  csv << "method";
  for (double f : sweep.fractions) csv << "," << format_double(f);
  csv << "\n";
  for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi) {
    text << std::left << std::setw(12) << sweep.methods[mi];
    csv << sweep.methods[mi];
    for (std::size_t fi = 0; fi < sweep.fractions.size(); ++fi) {
      const SweepCell& cell = sweep.cell(mi, fi);
      if (cell.failed()) {
        text << std::right << std::setw(10) << "error";
        csv << ",error";
        err << "cell " << cell.method << "/" << cell.fraction << " failed: " << cell.error << "\n";
      } else {
        std::ostringstream value;
        value << std::fixed << std::setprecision(2) << cell.mean();
        text << std::right << std::setw(10) << value.str();
        csv << "," << format_double(cell.mean());
      }
    }
    text << "\n";
    csv << "\n";
  }
  out << text.str();
  try {
    const fs::path root = resolve_out_root(out_root);
    fs::create_directories(root);
    write_file(root / "sweep_summary.csv", csv.str());
    out << "summary: " << (root / "sweep_summary.csv").string() << "\n";
  } catch (const std::exception& e) {
    err << "sweep summary write failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int report_pf_command(const std::string& run_dir, std::ostream& out, std::ostream& err) {
  PfReport report;
  try {
    report = compute_pf_report(run_dir);
  } catch (const std::exception& e) {
    err << "report-pf failed: " << e.what() << "\n";
    return 1;
  }
  std::ostringstream csv;
  csv << "task_id";
  for (std::size_t b = 0; b < report.block_count; ++b) csv << ",block_" << b;
  csv << "\n";
  out << std::left << std::setw(10) << "task";
  for (std::size_t b = 0; b < report.block_count; ++b) {
    out << std::right << std::setw(10) << ("block_" + std::to_string(b));
  }
  out << "\n";
  for (const auto& [task_id, means] : report.per_task) {
    out << std::left << std::setw(10) << task_id;
    csv << task_id;
    for (double m : means) {
      out << std::right << std::setw(10) << std::fixed << std::setprecision(4) << m;
      csv << "," << format_double(m);
    }
    out << "\n";
    csv << "\n";
  }
  out << std::left << std::setw(10) << "all";
  csv << "all";
  for (double m : report.overall_mean) {
    out << std::right << std::setw(10) << std::fixed << std::setprecision(4) << m;
    csv << "," << format_double(m);
  }
  out << "\n";
  csv << "\n";
  try {
    write_file(fs::path(run_dir) / "pf_report.csv", csv.str());
  } catch (const std::exception& e) {
    err << "report-pf write failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int report_time_command(const std::vector<std::string>& run_dirs, std::ostream& out,
                        std::ostream& err) {
  std::vector<TimeReportRow> rows;
  try {
    std::vector<fs::path> paths(run_dirs.begin(), run_dirs.end());
    rows = compute_time_report(paths);
  } catch (const std::exception& e) {
    err << "report-time failed: " << e.what() << "\n";
    return 1;
  }
  out << std::left << std::setw(12) << "method" << std::right << std::setw(18) << "backbone_s"
      << std::setw(18) << "regularizer_s" << std::setw(18) << "total_s"
      << "\n";
  for (const TimeReportRow& row : rows) {
    out << std::left << std::setw(12) << row.method << std::right << std::setw(18) << std::fixed
        << std::setprecision(3) << row.backbone_seconds << std::setw(18) << row.regularizer_seconds
        << std::setw(18) << (row.backbone_seconds + row.regularizer_seconds) << "\n";
  }
  return 0;
}

}  // namespace esp
