#pragma once

#include <string>

#include <json.hpp>

#include "esp/continual.hpp"
#include "esp/data.hpp"

namespace esp {

enum class DatasetKind { kGaussian, kCsv, kIdx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kGaussian;
  std::size_t task_count = 5;
  GaussianSpec gaussian;
  CsvSpec csv;
  IdxSpec idx;
};

struct ExperimentConfig {
  RunConfig run;
  DatasetConfig dataset;
  std::vector<std::size_t> task_order;  // permutation of task groups; empty = identity
  std::size_t class_count = 0;          // decoder width across the whole sequence
};

// Strict schema: unknown keys are rejected and every validation error names
// the offending field. Throws ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical echo of a parsed config: fixed key order, defaults filled in.
nlohmann::json config_to_json(const ExperimentConfig& config);

// FNV-1a of the canonical serialization; stable under key reordering of the
// source file.
std::string config_hash(const ExperimentConfig& config);

TaskStream build_stream(const ExperimentConfig& config);

}  // namespace esp
