#include "esp/continual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "esp/errors.hpp"

namespace esp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ExampleSet shuffled(DenseArray features, std::vector<std::size_t> labels, Rng& rng) {
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  ExampleSet out;
  out.features = take_rows(features, order);
  out.labels.reserve(labels.size());
  for (std::size_t i : order) out.labels.push_back(labels[i]);
  return out;
}

}  // namespace

Method method_from_name(std::string_view name) {
  if (name == "esp") return Method::kEsp;
  if (name == "stability") return Method::kStability;
  if (name == "plasticity") return Method::kPlasticity;
  if (name == "linear") return Method::kLinear;
  if (name == "oewc") return Method::kOewc;
  if (name == "si") return Method::kSi;
  throw ConfigError("method: unknown value '" + std::string(name) +
                    "' (expected esp|stability|plasticity|linear|oewc|si)");
}

const char* method_name(Method method) {
  switch (method) {
    case Method::kEsp: return "esp";
    case Method::kStability: return "stability";
    case Method::kPlasticity: return "plasticity";
    case Method::kLinear: return "linear";
    case Method::kOewc: return "oewc";
    case Method::kSi: return "si";
  }
  return "?";
}

Scenario scenario_from_name(std::string_view name) {
  if (name == "only") return Scenario::kOnly;
  if (name == "all") return Scenario::kAll;
  throw ConfigError("scenario: unknown value '" + std::string(name) + "' (expected only|all)");
}

const char* scenario_name(Scenario scenario) {
  return scenario == Scenario::kOnly ? "only" : "all";
}

void ReplayBuffer::absorb(const TaskDataset& sample) {
  if (sample.empty()) return;
  features = append_rows(features, sample.features);
  labels.insert(labels.end(), sample.labels.begin(), sample.labels.end());
}

TaskDataset sample_replay_subset(const TaskDataset& train, double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw ConfigError("replay_fraction: must be within [0, 1], got " + std::to_string(fraction));
  }
  const auto keep = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(train.size())));
  TaskDataset subset;
  subset.task_id = train.task_id;
  subset.class_set = train.class_set;
  const std::vector<std::size_t> idx = rng.sample_without_replacement(train.size(), keep);
  subset.features = take_rows(train.features, idx);
  subset.labels.reserve(keep);
  for (std::size_t i : idx) subset.labels.push_back(train.labels[i]);
  return subset;
}

ExampleSet build_training_set(const TaskDataset& task, const ReplayBuffer& buffer,
                              Scenario scenario, const TaskDataset& pending_sample,
                              bool first_task, bool only_strict, Rng& rng) {
  if (task.empty()) throw ConfigError("build_training_set: task has no examples");
  DenseArray features;
  std::vector<std::size_t> labels;
  if (scenario == Scenario::kAll || first_task) {
    features = append_rows(task.features, buffer.features);
    labels = task.labels;
    labels.insert(labels.end(), buffer.labels.begin(), buffer.labels.end());
  } else {
    features = buffer.features;
    labels = buffer.labels;
    if (!only_strict) {
      features = append_rows(features, pending_sample.features);
      labels.insert(labels.end(), pending_sample.labels.begin(), pending_sample.labels.end());
    }
  }
  if (labels.empty()) {
    throw ConfigError("build_training_set: empty result (ONLY scenario with an empty buffer?)");
  }
  return shuffled(std::move(features), std::move(labels), rng);
}

double evaluate(const BlockNetwork& net, const TaskDataset& test_set) {
  if (test_set.empty()) throw ConfigError("evaluate: test set is empty");
  constexpr std::size_t kEvalBatch = 256;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < test_set.size(); start += kEvalBatch) {
    const std::size_t end = std::min(start + kEvalBatch, test_set.size());
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    const DenseArray logits = forward(net, take_rows(test_set.features, idx)).logits;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      const double* row = logits.row(r);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (row[c] > row[best]) best = c;
      }
      if (best == test_set.labels[start + r]) ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test_set.size());
}

ContinualTrainer::ContinualTrainer(const RunConfig& config, std::size_t input_width,
                                   std::size_t class_count)
    : config_(config) {
  if (config.block_widths.size() < 2) {
    throw ConfigError("block_widths: needs at least 2 entries");
  }
  Rng init_rng = Rng::stream(config.seed, "net.init");
  net_ = make_mlp(input_width, config.block_widths, class_count, init_rng);
  optimizer_ = make_optimizer(net_, config.optimizer);
  buffer_.fraction = config.replay_fraction;
  switch (config.method) {
    case Method::kEsp: {
      Rng branch_rng = Rng::stream(config.seed, "branch.init");
      branches_ = make_branches(net_, config.branch_hidden, branch_rng);
      break;
    }
    case Method::kStability:
      schedule_ = stability_schedule(net_.block_count());
      break;
    case Method::kPlasticity:
      schedule_ = plasticity_schedule(net_.block_count());
      break;
    case Method::kLinear:
      schedule_ = linear_schedule(net_.block_count());
      break;
    case Method::kOewc:
      ewc_ = make_ewc_state(net_, config.params.lambda, config.params.gamma);
      break;
    case Method::kSi:
      si_ = make_si_state(net_, config.params.c, config.params.xi);
      break;
  }
}

void ContinualTrainer::baseline_step(const DenseArray& x, const std::vector<std::size_t>& y,
                                     double* loss_out) {
  const ForwardTrace trace = forward(net_, x);
  const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, y);
  *loss_out = ce.loss;
  GradientSet grads = backward(net_, trace, ce.grad_logits);
  std::vector<double> raw_grads;
  std::vector<double> theta_before;
  switch (config_.method) {
    case Method::kStability:
    case Method::kPlasticity:
    case Method::kLinear:
      static_scale(grads, schedule_);
      break;
    case Method::kOewc:
      if (ewc_.consolidated) ewc_penalized_grads(grads, net_, ewc_);
      break;
    case Method::kSi:
      // The path integral uses the raw task-loss gradient, not the
      // penalty-augmented one.
      raw_grads = flatten_gradients(grads);
      si_penalized_grads(grads, net_, si_);
      theta_before = flatten_parameters(net_);
      break;
    case Method::kEsp:
      throw ConfigError("baseline_step: esp uses esp_step");
  }
  apply_update(net_, grads, optimizer_);
  if (config_.method == Method::kSi) {
    std::vector<double> delta = flatten_parameters(net_);
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] -= theta_before[k];
    si_accumulate(si_, raw_grads, delta);
  }
}

TaskRunStats ContinualTrainer::train_task(const TaskDataset& task, bool first_task,
                                          std::vector<PfLogRow>* pf_rows) {
  const auto task_start = Clock::now();
  double regularizer_seconds = 0.0;
  const std::string task_tag = std::to_string(task.task_id);

  Rng replay_rng = Rng::stream(config_.seed, "replay.task." + task_tag);
  const TaskDataset pending = sample_replay_subset(task, config_.replay_fraction, replay_rng);

  if (config_.method == Method::kEsp) {
    // Phase one: branch fitting on the buffer plus a sampled slice of the
    // incoming task, backbone frozen throughout.
    Rng slice_rng = Rng::stream(config_.seed, "branch.data.task." + task_tag);
    const TaskDataset slice =
        sample_replay_subset(task, config_.params.branch_data_fraction, slice_rng);
    DenseArray fit_features = append_rows(buffer_.features, slice.features);
    std::vector<std::size_t> fit_labels = buffer_.labels;
    fit_labels.insert(fit_labels.end(), slice.labels.begin(), slice.labels.end());

    BranchFitOptions fit_options;
    fit_options.epochs = config_.params.branch_epochs;
    fit_options.batch_size = config_.batch_size;
    fit_options.optimizer = config_.optimizer;
    if (config_.params.branch_lr > 0.0) fit_options.optimizer.lr = config_.params.branch_lr;

    Rng fit_rng = Rng::stream(config_.seed, "branch.fit.task." + task_tag);
    const auto fit_start = Clock::now();
    fit_branches(net_, branches_, fit_features, fit_labels, fit_options, fit_rng);
    regularizer_seconds += seconds_since(fit_start);
  }

  Rng order_rng = Rng::stream(config_.seed, "order.task." + task_tag);
  const ExampleSet train_set = build_training_set(task, buffer_, config_.scenario, pending,
                                                  first_task, config_.only_strict, order_rng);

  TaskRunStats stats;
  double loss_sum = 0.0;
  const std::size_t batch = config_.batch_size == 0 ? train_set.size() : config_.batch_size;
  const std::vector<double>* pf_override =
      config_.pf_override.empty() ? nullptr : &config_.pf_override;
  for (std::size_t start = 0; start < train_set.size(); start += batch) {
    const std::size_t end = std::min(start + batch, train_set.size());
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    const DenseArray bx = take_rows(train_set.features, idx);
    const std::vector<std::size_t> by(train_set.labels.begin() + static_cast<std::ptrdiff_t>(start),
                                      train_set.labels.begin() + static_cast<std::ptrdiff_t>(end));
    double loss = 0.0;
    if (config_.method == Method::kEsp) {
      const EspStepResult step = esp_step(net_, branches_, bx, by, optimizer_, config_.tau,
                                          pf_override);
      loss = step.loss;
      if (pf_rows != nullptr) {
        for (std::size_t b = 0; b < step.pf.pf.size(); ++b) {
          pf_rows->push_back({task.task_id, stats.steps, b, step.entropies.e[b], step.pf.pf[b],
                              b < step.frozen_below});
        }
      }
    } else {
      baseline_step(bx, by, &loss);
    }
    loss_sum += loss;
    ++stats.steps;
  }

  if (config_.method == Method::kOewc) {
    // Consolidation sample defaults to the replay-destined subset; with
    // replay disabled the full task stands in.
    const TaskDataset& sample = pending.empty() ? task : pending;
    const auto cons_start = Clock::now();
    ewc_consolidate(net_, sample.features, sample.labels, ewc_);
    regularizer_seconds += seconds_since(cons_start);
  } else if (config_.method == Method::kSi) {
    const auto cons_start = Clock::now();
    si_consolidate(si_, flatten_parameters(net_));
    regularizer_seconds += seconds_since(cons_start);
  }

  buffer_.absorb(pending);

  stats.mean_loss = stats.steps > 0 ? loss_sum / static_cast<double>(stats.steps) : 0.0;
  stats.timing.task_id = task.task_id;
  stats.timing.regularizer_seconds = regularizer_seconds;
  stats.timing.backbone_seconds = seconds_since(task_start) - regularizer_seconds;
  return stats;
}

RunResult run_sequence(const TaskStream& stream, const RunConfig& config) {
  if (stream.tasks.empty()) throw ConfigError("run_sequence: stream has no tasks");
  ContinualTrainer trainer(config, stream.feature_width, stream.class_count);
  const std::size_t task_count = stream.tasks.size();

  RunResult result;
  for (std::size_t t = 0; t < task_count; ++t) {
    const TaskRunStats stats = trainer.train_task(stream.tasks[t].train, t == 0, &result.pf_log);
    result.timing.push_back(stats.timing);
    result.backbone_seconds += stats.timing.backbone_seconds;
    result.regularizer_seconds += stats.timing.regularizer_seconds;
    std::vector<double> row(task_count);
    for (std::size_t j = 0; j < task_count; ++j) {
      row[j] = evaluate(trainer.network(), stream.tasks[j].test);
    }
    result.accuracy_matrix.push_back(std::move(row));
  }

  const std::vector<double>& final_row = result.accuracy_matrix.back();
  double sum = 0.0;
  for (double a : final_row) sum += a;
  result.average_accuracy = sum / static_cast<double>(task_count);

  result.forgetting.resize(task_count);
  for (std::size_t j = 0; j < task_count; ++j) {
    double best = 0.0;
    for (std::size_t k = 0; k < task_count; ++k) {
      best = std::max(best, result.accuracy_matrix[k][j]);
    }
    result.forgetting[j] = best - final_row[j];
  }
  result.network = trainer.network();
  return result;
}

}  // namespace esp
