#include "esp/config.hpp"

#include <fstream>
#include <set>

#include "esp/errors.hpp"

namespace esp {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& scope,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(scope.empty() ? "unknown key '" + key + "'"
                                      : scope + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const std::string& scope, const std::string& key) {
  if (!obj.contains(key)) {
    throw ConfigError((scope.empty() ? key : scope + "." + key) + ": missing required field");
  }
  return obj.at(key);
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + ": expected a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(field + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field + ": expected a boolean");
  return v.get<bool>();
}

double unit_interval(const json& v, const std::string& field) {
  const double x = as_number(v, field);
  if (x < 0.0 || x > 1.0) {
    throw ConfigError(field + ": must be within [0, 1], got " + v.dump());
  }
  return x;
}

OptimizerConfig parse_optimizer(const json& obj) {
  reject_unknown_keys(obj, "optimizer", {"kind", "lr", "momentum", "beta1", "beta2", "eps"});
  OptimizerConfig out;
  const std::string kind = as_string(require(obj, "optimizer", "kind"), "optimizer.kind");
  if (kind == "sgd") {
    out.kind = OptimizerKind::kSgd;
    out.lr = 1e-3;
    out.momentum = 0.9;
  } else if (kind == "adam") {
    out.kind = OptimizerKind::kAdam;
    out.lr = 3e-5;
  } else {
    throw ConfigError("optimizer.kind: unknown value '" + kind + "' (expected sgd|adam)");
  }
  if (obj.contains("lr")) {
    out.lr = as_number(obj["lr"], "optimizer.lr");
    if (out.lr <= 0.0) throw ConfigError("optimizer.lr: must be positive");
  }
  if (obj.contains("momentum")) {
    out.momentum = as_number(obj["momentum"], "optimizer.momentum");
    if (out.momentum < 0.0 || out.momentum >= 1.0) {
      throw ConfigError("optimizer.momentum: must be within [0, 1)");
    }
  }
  if (obj.contains("beta1")) out.beta1 = as_number(obj["beta1"], "optimizer.beta1");
  if (obj.contains("beta2")) out.beta2 = as_number(obj["beta2"], "optimizer.beta2");
  if (obj.contains("eps")) out.eps = as_number(obj["eps"], "optimizer.eps");
  return out;
}

MethodParams parse_method_params(const json& obj) {
  reject_unknown_keys(obj, "method_params",
                      {"lambda", "gamma", "c", "xi", "branch_epochs", "branch_lr",
                       "branch_data_fraction"});
  MethodParams out;
  if (obj.contains("lambda")) {
    out.lambda = as_number(obj["lambda"], "method_params.lambda");
    if (out.lambda < 0.0) throw ConfigError("method_params.lambda: must be >= 0");
  }
  if (obj.contains("gamma")) out.gamma = unit_interval(obj["gamma"], "method_params.gamma");
  if (obj.contains("c")) {
    out.c = as_number(obj["c"], "method_params.c");
    if (out.c < 0.0) throw ConfigError("method_params.c: must be >= 0");
  }
  if (obj.contains("xi")) {
    out.xi = as_number(obj["xi"], "method_params.xi");
    if (out.xi <= 0.0) throw ConfigError("method_params.xi: must be positive");
  }
  if (obj.contains("branch_epochs")) {
    out.branch_epochs = as_count(obj["branch_epochs"], "method_params.branch_epochs");
  }
  if (obj.contains("branch_lr")) {
    out.branch_lr = as_number(obj["branch_lr"], "method_params.branch_lr");
    if (out.branch_lr < 0.0) throw ConfigError("method_params.branch_lr: must be >= 0");
  }
  if (obj.contains("branch_data_fraction")) {
    out.branch_data_fraction =
        unit_interval(obj["branch_data_fraction"], "method_params.branch_data_fraction");
  }
  return out;
}

DatasetConfig parse_dataset(const json& obj, std::size_t class_count, std::uint64_t seed) {
  DatasetConfig out;
  const std::string type = as_string(require(obj, "dataset", "type"), "dataset.type");
  out.task_count = as_count(require(obj, "dataset", "tasks"), "dataset.tasks");
  if (out.task_count == 0) throw ConfigError("dataset.tasks: must be positive");
  if (type == "gaussian") {
    reject_unknown_keys(obj, "dataset",
                        {"type", "tasks", "dims", "stddev", "mean_scale", "train_per_class",
                         "test_per_class", "means"});
    out.kind = DatasetKind::kGaussian;
    out.gaussian.class_count = class_count;
    out.gaussian.seed = seed;
    if (obj.contains("dims")) out.gaussian.dims = as_count(obj["dims"], "dataset.dims");
    if (obj.contains("stddev")) {
      out.gaussian.stddev = as_number(obj["stddev"], "dataset.stddev");
      if (out.gaussian.stddev <= 0.0) throw ConfigError("dataset.stddev: must be positive");
    }
    if (obj.contains("mean_scale")) {
      out.gaussian.mean_scale = as_number(obj["mean_scale"], "dataset.mean_scale");
    }
    if (obj.contains("train_per_class")) {
      out.gaussian.train_per_class = as_count(obj["train_per_class"], "dataset.train_per_class");
    }
    if (obj.contains("test_per_class")) {
      out.gaussian.test_per_class = as_count(obj["test_per_class"], "dataset.test_per_class");
    }
    if (obj.contains("means")) {
      const json& means = obj["means"];
      if (!means.is_array()) throw ConfigError("dataset.means: expected an array of arrays");
      for (const auto& mean : means) {
        std::vector<double> row;
        for (const auto& v : mean) row.push_back(as_number(v, "dataset.means"));
        out.gaussian.means.push_back(std::move(row));
      }
    }
  } else if (type == "csv") {
    reject_unknown_keys(obj, "dataset", {"type", "tasks", "train", "test"});
    out.kind = DatasetKind::kCsv;
    out.csv.train_path = as_string(require(obj, "dataset", "train"), "dataset.train");
    out.csv.test_path = as_string(require(obj, "dataset", "test"), "dataset.test");
  } else if (type == "idx") {
    reject_unknown_keys(obj, "dataset",
                        {"type", "tasks", "train_images", "train_labels", "test_images",
                         "test_labels"});
    out.kind = DatasetKind::kIdx;
    out.idx.train_images =
        as_string(require(obj, "dataset", "train_images"), "dataset.train_images");
    out.idx.train_labels =
        as_string(require(obj, "dataset", "train_labels"), "dataset.train_labels");
    out.idx.test_images = as_string(require(obj, "dataset", "test_images"), "dataset.test_images");
    out.idx.test_labels = as_string(require(obj, "dataset", "test_labels"), "dataset.test_labels");
  } else {
    throw ConfigError("dataset.type: unknown value '" + type + "' (expected gaussian|csv|idx)");
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown_keys(j, "",
                      {"method", "scenario", "replay_fraction", "seed", "arch", "optimizer",
                       "batch_size", "tau", "method_params", "dataset", "task_order",
                       "only_strict"});
  ExperimentConfig out;
  out.run.method = method_from_name(as_string(require(j, "", "method"), "method"));
  out.run.scenario = scenario_from_name(as_string(require(j, "", "scenario"), "scenario"));
  out.run.replay_fraction = unit_interval(require(j, "", "replay_fraction"), "replay_fraction");
  const json& seed_value = require(j, "", "seed");
  if (!seed_value.is_number_unsigned() &&
      (!seed_value.is_number_integer() || seed_value.get<long long>() < 0)) {
    throw ConfigError("seed: expected a non-negative integer");
  }
  out.run.seed = seed_value.get<std::uint64_t>();

  const json& arch = require(j, "", "arch");
  reject_unknown_keys(arch, "arch", {"block_widths", "branch_hidden", "class_count"});
  const json& widths = require(arch, "arch", "block_widths");
  if (!widths.is_array() || widths.size() < 2) {
    throw ConfigError("arch.block_widths: expected an array of at least 2 widths");
  }
  out.run.block_widths.clear();
  for (const auto& w : widths) {
    const std::size_t width = as_count(w, "arch.block_widths");
    if (width == 0) throw ConfigError("arch.block_widths: widths must be positive");
    out.run.block_widths.push_back(width);
  }
  out.class_count = as_count(require(arch, "arch", "class_count"), "arch.class_count");
  if (out.class_count < 2) throw ConfigError("arch.class_count: must be at least 2");
  if (arch.contains("branch_hidden")) {
    out.run.branch_hidden = as_count(arch["branch_hidden"], "arch.branch_hidden");
  }

  out.run.optimizer = parse_optimizer(require(j, "", "optimizer"));
  if (j.contains("batch_size")) {
    out.run.batch_size = as_count(j["batch_size"], "batch_size");
    if (out.run.batch_size == 0) throw ConfigError("batch_size: must be positive");
  }
  if (j.contains("tau")) {
    out.run.tau = as_number(j["tau"], "tau");
    if (out.run.tau < 0.0) throw ConfigError("tau: must be >= 0");
  }
  if (j.contains("method_params")) out.run.params = parse_method_params(j["method_params"]);
  if (j.contains("only_strict")) out.run.only_strict = as_bool(j["only_strict"], "only_strict");

  out.dataset = parse_dataset(require(j, "", "dataset"), out.class_count, out.run.seed);
  if (j.contains("task_order")) {
    const json& order = j["task_order"];
    if (!order.is_array()) throw ConfigError("task_order: expected an array");
    for (const auto& v : order) out.task_order.push_back(as_count(v, "task_order"));
  }
  if (out.dataset.kind == DatasetKind::kGaussian &&
      out.class_count % out.dataset.task_count != 0) {
    throw ConfigError("dataset.tasks: class_count " + std::to_string(out.class_count) +
                      " is not divisible into " + std::to_string(out.dataset.task_count) +
                      " tasks");
  }
  return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  json j;
  j["method"] = method_name(config.run.method);
  j["scenario"] = scenario_name(config.run.scenario);
  j["replay_fraction"] = config.run.replay_fraction;
  j["seed"] = config.run.seed;
  j["arch"] = {{"block_widths", config.run.block_widths},
               {"branch_hidden", config.run.branch_hidden},
               {"class_count", config.class_count}};
  j["optimizer"] = {
      {"kind", config.run.optimizer.kind == OptimizerKind::kSgd ? "sgd" : "adam"},
      {"lr", config.run.optimizer.lr},
      {"momentum", config.run.optimizer.momentum},
      {"beta1", config.run.optimizer.beta1},
      {"beta2", config.run.optimizer.beta2},
      {"eps", config.run.optimizer.eps}};
  j["batch_size"] = config.run.batch_size;
  j["tau"] = config.run.tau;
  j["method_params"] = {{"lambda", config.run.params.lambda},
                        {"gamma", config.run.params.gamma},
                        {"c", config.run.params.c},
                        {"xi", config.run.params.xi},
                        {"branch_epochs", config.run.params.branch_epochs},
                        {"branch_lr", config.run.params.branch_lr},
                        {"branch_data_fraction", config.run.params.branch_data_fraction}};
  j["only_strict"] = config.run.only_strict;
  json dataset;
  dataset["tasks"] = config.dataset.task_count;
  switch (config.dataset.kind) {
    case DatasetKind::kGaussian:
      dataset["type"] = "gaussian";
      dataset["dims"] = config.dataset.gaussian.dims;
      dataset["stddev"] = config.dataset.gaussian.stddev;
      dataset["mean_scale"] = config.dataset.gaussian.mean_scale;
      dataset["train_per_class"] = config.dataset.gaussian.train_per_class;
      dataset["test_per_class"] = config.dataset.gaussian.test_per_class;
      if (!config.dataset.gaussian.means.empty()) dataset["means"] = config.dataset.gaussian.means;
      break;
    case DatasetKind::kCsv:
      dataset["type"] = "csv";
      dataset["train"] = config.dataset.csv.train_path;
      dataset["test"] = config.dataset.csv.test_path;
      break;
    case DatasetKind::kIdx:
      dataset["type"] = "idx";
      dataset["train_images"] = config.dataset.idx.train_images;
      dataset["train_labels"] = config.dataset.idx.train_labels;
      dataset["test_images"] = config.dataset.idx.test_images;
      dataset["test_labels"] = config.dataset.idx.test_labels;
      break;
  }
  j["dataset"] = dataset;
  if (!config.task_order.empty()) j["task_order"] = config.task_order;
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  // nlohmann objects iterate in sorted key order, so dump() is canonical.
  const std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

TaskStream build_stream(const ExperimentConfig& config) {
  TaskStream stream;
  switch (config.dataset.kind) {
    case DatasetKind::kGaussian:
      stream = generate_gaussian_stream(config.dataset.gaussian, config.dataset.task_count,
                                        config.task_order);
      break;
    case DatasetKind::kCsv:
      stream = load_csv_stream(config.dataset.csv, config.dataset.task_count, config.task_order);
      break;
    case DatasetKind::kIdx:
      stream = load_idx_stream(config.dataset.idx, config.dataset.task_count, config.task_order);
      break;
  }
  if (stream.class_count != config.class_count) {
    throw ConfigError("arch.class_count: config says " + std::to_string(config.class_count) +
                      " but the dataset has " + std::to_string(stream.class_count) + " classes");
  }
  return stream;
}

}  // namespace esp
