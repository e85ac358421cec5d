#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "esp/dataset.hpp"
#include "esp/network.hpp"
#include "esp/optimizer.hpp"
#include "esp/plasticity.hpp"
#include "esp/regularize.hpp"
#include "esp/rng.hpp"

namespace esp {

enum class Method { kEsp, kStability, kPlasticity, kLinear, kOewc, kSi };
enum class Scenario { kOnly, kAll };

Method method_from_name(std::string_view name);
const char* method_name(Method method);
Scenario scenario_from_name(std::string_view name);
const char* scenario_name(Scenario scenario);

// Stored subset of past tasks: floor(fraction * |task|) uniformly sampled
// rows per finished task, appended in task order.
struct ReplayBuffer {
  DenseArray features;
  std::vector<std::size_t> labels;
  double fraction = 0.1;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  void absorb(const TaskDataset& sample);
};

// floor(fraction * N) examples drawn uniformly without replacement, seeded.
TaskDataset sample_replay_subset(const TaskDataset& train, double fraction, Rng& rng);

struct ExampleSet {
  DenseArray features;
  std::vector<std::size_t> labels;
  std::size_t size() const { return labels.size(); }
};

// ALL: the full current task concatenated with the buffer. ONLY: the buffer
// plus the current task's replay-destined sample (strict drops even that).
// The first presented task always trains on its own full data. The result is
// shuffled with the caller's stream.
ExampleSet build_training_set(const TaskDataset& task, const ReplayBuffer& buffer,
                              Scenario scenario, const TaskDataset& pending_sample,
                              bool first_task, bool only_strict, Rng& rng);

struct MethodParams {
  double lambda = 2000.0;  // oewc penalty coefficient
  double gamma = 1.0;      // oewc running-Fisher decay
  double c = 0.1;          // si penalty coefficient
  double xi = 0.1;         // si damping
  std::size_t branch_epochs = 1;
  double branch_lr = 0.0;  // 0 falls back to the backbone learning rate
  double branch_data_fraction = 0.1;
};

struct RunConfig {
  Method method = Method::kPlasticity;
  Scenario scenario = Scenario::kAll;
  double replay_fraction = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> block_widths = {64, 64, 64, 64};
  std::size_t branch_hidden = 0;  // 0 falls back to the block width
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  double tau = 0.0;  // freeze threshold; 0 means pure scaling
  MethodParams params;
  bool only_strict = false;
  std::vector<double> pf_override;  // test hook; empty disables
};

struct PfLogRow {
  std::size_t task_id = 0;
  std::size_t step = 0;
  std::size_t block_index = 0;
  double entropy = 0.0;
  double pf = 0.0;
  bool frozen = false;
};

struct TaskTiming {
  std::size_t task_id = 0;
  double backbone_seconds = 0.0;
  double regularizer_seconds = 0.0;
};

struct TaskRunStats {
  TaskTiming timing;
  std::size_t steps = 0;
  double mean_loss = 0.0;
};

struct RunResult {
  std::vector<std::vector<double>> accuracy_matrix;  // row t: after task t, percent
  double average_accuracy = 0.0;                     // mean of the final row
  std::vector<double> forgetting;                    // max_k a[k][j] - a[T-1][j]
  std::vector<PfLogRow> pf_log;
  std::vector<TaskTiming> timing;
  double backbone_seconds = 0.0;
  double regularizer_seconds = 0.0;
  BlockNetwork network;  // state after the last task
};

// Accuracy percent by argmax over all classes; never sees a task identity.
double evaluate(const BlockNetwork& net, const TaskDataset& test_set);

// Owns everything one run mutates: network, branches, optimizer, regularizer
// states and replay buffer. One logical writer per instance.
class ContinualTrainer {
 public:
  ContinualTrainer(const RunConfig& config, std::size_t input_width, std::size_t class_count);

  // One pass over the task's training set (batched, ceil(N/batch) steps),
  // two-phase for ESP, consolidation afterwards for O-EWC/SI, replay buffer
  // update last. Total wall-clock splits exactly into backbone (the pass)
  // and regularizer (branch fitting, consolidation) seconds.
  TaskRunStats train_task(const TaskDataset& task, bool first_task,
                          std::vector<PfLogRow>* pf_rows);

  const BlockNetwork& network() const { return net_; }
  BlockNetwork& network() { return net_; }
  const BranchSet& branches() const { return branches_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const EwcState& ewc_state() const { return ewc_; }
  const SiState& si_state() const { return si_; }

 private:
  void baseline_step(const DenseArray& x, const std::vector<std::size_t>& y, double* loss_out);

  RunConfig config_;
  BlockNetwork net_;
  BranchSet branches_;
  Optimizer optimizer_;
  StaticFactorSchedule schedule_;
  EwcState ewc_;
  SiState si_;
  ReplayBuffer buffer_;
};

// Trains tasks in order, filling row t of the T x T accuracy matrix after
// each task; emits PF and timing logs.
RunResult run_sequence(const TaskStream& stream, const RunConfig& config);

}  // namespace esp
