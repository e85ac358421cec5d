// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances and thresholds are pinned in code; behavioral
// criteria run the default 10-class / 5-task Gaussian fixture on a 4-block
// MLP with the stock SGD settings (lr 1e-3, momentum 0.9, batch 32).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "esp/continual.hpp"
#include "esp/data.hpp"
#include "esp/harness.hpp"
#include "esp/plasticity.hpp"
#include "esp/regularize.hpp"

using namespace esp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& info) {
    if (!detail.empty()) detail += "; ";
    detail += info;
  }
};

std::string fmt(double v, int precision = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

std::string fmt_sci(double v) {
  std::ostringstream out;
  out.setf(std::ios::scientific);
  out.precision(2);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// Shared fixture plumbing.

GaussianSpec default_fixture_spec(std::uint64_t seed) {
  GaussianSpec spec;  // 10 classes, 16 dims, 500 train / 200 test per class
  spec.seed = seed;
  return spec;
}

RunConfig fixture_config(Method method, std::uint64_t seed, double replay_fraction) {
  RunConfig config;
  config.method = method;
  config.scenario = Scenario::kAll;
  config.replay_fraction = replay_fraction;
  config.seed = seed;
  config.block_widths = {64, 64, 64, 64};
  config.optimizer.kind = OptimizerKind::kSgd;
  config.optimizer.lr = 1e-3;
  config.optimizer.momentum = 0.9;
  config.batch_size = 32;
  config.tau = 0.0;
  return config;
}

struct FixtureBatches {
  DenseArray features;
  std::vector<std::size_t> labels;

  std::pair<DenseArray, std::vector<std::size_t>> batch(std::size_t step,
                                                        std::size_t size) const {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = (step * size + i) % labels.size();
    std::vector<std::size_t> batch_labels(size);
    for (std::size_t i = 0; i < size; ++i) batch_labels[i] = labels[idx[i]];
    return {take_rows(features, idx), std::move(batch_labels)};
  }
};

struct StepFixture {
  BlockNetwork net;
  BranchSet branches;
  FixtureBatches batches;
};

StepFixture make_step_fixture(std::uint64_t seed) {
  const TaskStream stream = generate_gaussian_stream(default_fixture_spec(seed), 5);
  StepFixture fixture;
  Rng init_rng = Rng::stream(seed, "net.init");
  fixture.net = make_mlp(16, {64, 64, 64, 64}, 10, init_rng);
  Rng branch_rng = Rng::stream(seed, "branch.init");
  fixture.branches = make_branches(fixture.net, 0, branch_rng);

  Rng slice_rng = Rng::stream(seed, "branch.data");
  const TaskDataset slice = sample_replay_subset(stream.tasks[0].train, 0.1, slice_rng);
  BranchFitOptions fit_options;
  fit_options.optimizer.kind = OptimizerKind::kSgd;
  fit_options.optimizer.lr = 1e-3;
  fit_options.optimizer.momentum = 0.9;
  Rng fit_rng = Rng::stream(seed, "branch.fit");
  fit_branches(fixture.net, fixture.branches, slice.features, slice.labels, fit_options, fit_rng);

  fixture.batches.features = stream.tasks[0].train.features;
  fixture.batches.labels = stream.tasks[0].train.labels;
  return fixture;
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome criterion_pf_invariants() {
  Outcome outcome;
  const auto start = Clock::now();
  Rng rng(101);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t blocks = 2 + rng.index(11);  // B in {2..12}
    EntropyVector e;
    for (std::size_t i = 0; i < blocks; ++i) e.e.push_back(rng.uniform(0.0, std::log(64.0)));
    const PlasticityFactors pf = plasticity_factors(e);
    double sum = 0.0;
    for (double v : pf.pf) {
      if (!(v > 0.0 && v < 1.0)) {
        outcome.fail("pf out of (0,1): " + fmt(v, 12));
        return outcome;
      }
      sum += v;
    }
    if (std::fabs(sum - static_cast<double>(blocks - 1)) > 1e-9) {
      outcome.fail("sum deviates by " + fmt(sum - static_cast<double>(blocks - 1), 12));
      return outcome;
    }
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t blocks = 2 + rng.index(11);
    EntropyVector e;
    for (std::size_t i = 0; i < blocks; ++i) e.e.push_back(rng.uniform(0.0, 3.0));
    const std::size_t target = rng.index(blocks);
    EntropyVector bumped = e;
    bumped.e[target] += rng.uniform(0.01, 1.0);
    const PlasticityFactors before = plasticity_factors(e);
    const PlasticityFactors after = plasticity_factors(bumped);
    if (!(after.pf[target] < before.pf[target])) {
      outcome.fail("raising e[i] did not lower pf[i]");
      return outcome;
    }
    for (std::size_t i = 0; i < blocks; ++i) {
      if (i != target && !(after.pf[i] > before.pf[i])) {
        outcome.fail("raising e[i] did not raise pf[j]");
        return outcome;
      }
    }
  }
  const double elapsed = seconds_since(start);
  outcome.note("10000 vectors + 1000 perturbations in " + fmt(elapsed) + " s");
  if (elapsed >= 5.0) outcome.fail("runtime exceeded 5 s");
  return outcome;
}

Outcome criterion_plasticity_equivalence() {
  Outcome outcome;
  StepFixture fixture = make_step_fixture(202);
  BlockNetwork esp_net = fixture.net;
  BlockNetwork base_net = fixture.net;
  OptimizerConfig opt_config;
  opt_config.kind = OptimizerKind::kSgd;
  opt_config.lr = 1e-3;
  opt_config.momentum = 0.9;
  Optimizer esp_opt = make_optimizer(esp_net, opt_config);
  Optimizer base_opt = make_optimizer(base_net, opt_config);
  const std::vector<double> ones(esp_net.block_count(), 1.0);
  const StaticFactorSchedule schedule = plasticity_schedule(base_net.block_count());

  for (std::size_t step = 0; step < 50; ++step) {
    const auto [x, y] = fixture.batches.batch(step, 32);
    esp_step(esp_net, fixture.branches, x, y, esp_opt, /*tau=*/0.0, &ones);

    const ForwardTrace trace = forward(base_net, x);
    const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, y);
    GradientSet grads = backward(base_net, trace, ce.grad_logits);
    static_scale(grads, schedule);
    apply_update(base_net, grads, base_opt);

    if (flatten_parameters(esp_net) != flatten_parameters(base_net)) {
      outcome.fail("trajectories diverged at step " + std::to_string(step));
      return outcome;
    }
  }
  outcome.note("50 steps bit-identical");
  return outcome;
}

Outcome criterion_freezing_equivalence() {
  Outcome outcome;
  StepFixture fixture = make_step_fixture(303);
  BlockNetwork partial_net = fixture.net;
  BlockNetwork full_net = fixture.net;
  OptimizerConfig opt_config;
  opt_config.kind = OptimizerKind::kSgd;  // plain SGD per the criterion
  opt_config.lr = 1e-3;
  opt_config.momentum = 0.0;
  Optimizer partial_opt = make_optimizer(partial_net, opt_config);
  Optimizer full_opt = make_optimizer(full_net, opt_config);
  const double tau = 0.78;

  std::size_t frozen_steps = 0;
  for (std::size_t step = 0; step < 50; ++step) {
    const auto [x, y] = fixture.batches.batch(step, 32);
    const EspStepResult result =
        esp_step(partial_net, fixture.branches, x, y, partial_opt, tau);
    if (result.frozen_below > 0) ++frozen_steps;

    // Reference route: full gradients, frozen prefix zeroed by scaling.
    const ForwardTrace trace = forward(full_net, x);
    EntropyVector entropies;
    for (std::size_t b = 0; b < full_net.block_count(); ++b) {
      entropies.e.push_back(
          branch_entropy(branch_forward(fixture.branches.branches[b], trace.block_outputs[b])));
    }
    PlasticityFactors pf = plasticity_factors(entropies);
    const std::size_t frozen = freeze_schedule(pf, tau);
    const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, y);
    GradientSet grads = backward(full_net, trace, ce.grad_logits);
    scale_gradients(grads, pf);
    apply_update(full_net, grads, full_opt);

    if (frozen != result.frozen_below) {
      outcome.fail("freeze schedules diverged at step " + std::to_string(step));
      return outcome;
    }
    if (flatten_parameters(partial_net) != flatten_parameters(full_net)) {
      outcome.fail("trajectories diverged at step " + std::to_string(step));
      return outcome;
    }
  }
  outcome.note(std::to_string(frozen_steps) + "/50 steps froze a prefix");
  if (frozen_steps == 0) outcome.fail("tau never froze anything; equivalence untested");
  return outcome;
}

Outcome criterion_phase_isolation() {
  Outcome outcome;
  const TaskStream stream = generate_gaussian_stream(default_fixture_spec(404), 5);
  const std::uint64_t seed = 404;
  Rng init_rng = Rng::stream(seed, "net.init");
  BlockNetwork net = make_mlp(16, {64, 64, 64, 64}, 10, init_rng);
  Rng branch_rng = Rng::stream(seed, "branch.init");
  BranchSet branches = make_branches(net, 0, branch_rng);
  Optimizer optimizer = make_optimizer(net, fixture_config(Method::kEsp, seed, 0.2).optimizer);
  ReplayBuffer buffer;
  buffer.fraction = 0.2;

  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const TaskDataset& task = stream.tasks[t].train;
    const std::string tag = std::to_string(t);
    Rng replay_rng = Rng::stream(seed, "replay.task." + tag);
    const TaskDataset pending = sample_replay_subset(task, 0.2, replay_rng);

    Rng slice_rng = Rng::stream(seed, "branch.data.task." + tag);
    const TaskDataset slice = sample_replay_subset(task, 0.1, slice_rng);
    const DenseArray fit_features = append_rows(buffer.features, slice.features);
    std::vector<std::size_t> fit_labels = buffer.labels;
    fit_labels.insert(fit_labels.end(), slice.labels.begin(), slice.labels.end());

    const std::uint64_t backbone_before = parameter_checksum(net);
    BranchFitOptions fit_options;
    fit_options.optimizer.kind = OptimizerKind::kSgd;
    fit_options.optimizer.lr = 1e-3;
    fit_options.optimizer.momentum = 0.9;
    Rng fit_rng = Rng::stream(seed, "branch.fit.task." + tag);
    fit_branches(net, branches, fit_features, fit_labels, fit_options, fit_rng);
    if (parameter_checksum(net) != backbone_before) {
      outcome.fail("fit_branches changed the backbone at task " + tag);
      return outcome;
    }

    Rng order_rng = Rng::stream(seed, "order.task." + tag);
    const ExampleSet train_set = build_training_set(task, buffer, Scenario::kAll, pending,
                                                    t == 0, false, order_rng);
    const std::uint64_t branches_before = branch_checksum(branches);
    for (std::size_t start = 0; start < train_set.size(); start += 32) {
      const std::size_t end = std::min(start + 32, train_set.size());
      std::vector<std::size_t> idx(end - start);
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
      const DenseArray bx = take_rows(train_set.features, idx);
      const std::vector<std::size_t> by(train_set.labels.begin() + static_cast<long>(start),
                                        train_set.labels.begin() + static_cast<long>(end));
      esp_step(net, branches, bx, by, optimizer, 0.0);
    }
    if (branch_checksum(branches) != branches_before) {
      outcome.fail("esp_step changed branch parameters at task " + tag);
      return outcome;
    }
    buffer.absorb(pending);
  }
  outcome.note("checksums held across 5 tasks");
  return outcome;
}

Outcome criterion_gradient_correctness() {
  Outcome outcome;
  Rng rng(505);
  const double tol = 1e-5;
  double worst = 0.0;

  auto fd_check = [&](const std::vector<double>& analytic,
                      const std::function<double(const std::vector<double>&)>& loss,
                      std::vector<double> theta) {
    std::vector<double> fd(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double original = theta[i];
      theta[i] = original + 1e-5;
      const double up = loss(theta);
      theta[i] = original - 1e-5;
      const double down = loss(theta);
      theta[i] = original;
      fd[i] = (up - down) / 2e-5;
    }
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double scale = std::max({1.0, std::fabs(fd[i]), std::fabs(analytic[i])});
      worst = std::max(worst, std::fabs(fd[i] - analytic[i]) / scale);
    }
  };

  // Central differences are only valid away from relu kinks: redraw any
  // instance whose pre-activations sit within 1e-3 of zero.
  auto clear_of_kinks = [](const ForwardTrace& trace) {
    for (const auto& block : trace.layer_pre) {
      for (const DenseArray& pre : block) {
        for (double v : pre.values()) {
          if (std::fabs(v) < 1e-3) return false;
        }
      }
    }
    return true;
  };

  for (int instance = 0; instance < 20; ++instance) {
    // Network layers through the cross-entropy loss.
    const std::size_t classes = 2 + rng.index(3);
    BlockNetwork net = make_mlp(3, {4, 4, 4}, classes, rng);
    DenseArray x(2, 3);
    std::vector<std::size_t> labels;
    ForwardTrace trace;
    for (int attempt = 0; attempt < 100; ++attempt) {
      net = make_mlp(3, {4, 4, 4}, classes, rng);
      for (double& v : x.values()) v = rng.normal();
      labels = {rng.index(classes), rng.index(classes)};
      trace = forward(net, x);
      if (clear_of_kinks(trace)) break;
    }
    const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, labels);
    BlockNetwork probe = net;
    fd_check(flatten_gradients(backward(net, trace, ce.grad_logits)),
             [&](const std::vector<double>& theta) {
               assign_parameters(probe, theta);
               return cross_entropy_with_logits(forward(probe, x).logits, labels).loss;
             },
             flatten_parameters(net));

    // Branch layers through the cross-entropy loss.
    const DenseArray input = trace.block_outputs[0];
    BranchSet branches = make_branches(net, 0, rng);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const DenseArray probe_pre =
          linear_forward(input, branches.branches[0].hidden.w, branches.branches[0].hidden.b);
      bool clear = true;
      for (double v : probe_pre.values()) {
        if (std::fabs(v) < 1e-3) clear = false;
      }
      if (clear) break;
      branches = make_branches(net, 0, rng);
    }
    const BranchLayer& branch = branches.branches[0];
    const DenseArray pre = linear_forward(input, branch.hidden.w, branch.hidden.b);
    const DenseArray h = relu_forward(pre);
    const DenseArray logits = linear_forward(h, branch.out.w, branch.out.b);
    const CrossEntropyResult bce = cross_entropy_with_logits(logits, labels);
    LinearGrads out_grads = linear_backward(h, branch.out.w, bce.grad_logits);
    const DenseArray grad_pre = relu_backward(pre, out_grads.x);
    LinearGrads hidden_grads = linear_backward(input, branch.hidden.w, grad_pre);
    std::vector<double> branch_analytic;
    std::vector<double> branch_theta;
    for (const DenseArray* a : {&hidden_grads.w, &hidden_grads.b, &out_grads.w, &out_grads.b}) {
      branch_analytic.insert(branch_analytic.end(), a->values().begin(), a->values().end());
    }
    for (const DenseArray* a : {&branch.hidden.w, &branch.hidden.b, &branch.out.w, &branch.out.b}) {
      branch_theta.insert(branch_theta.end(), a->values().begin(), a->values().end());
    }
    fd_check(branch_analytic,
             [&](const std::vector<double>& theta) {
               BranchLayer probe_branch = branch;
               std::size_t offset = 0;
               for (DenseArray* a : {&probe_branch.hidden.w, &probe_branch.hidden.b,
                                     &probe_branch.out.w, &probe_branch.out.b}) {
                 for (std::size_t i = 0; i < a->size(); ++i) a->values()[i] = theta[offset + i];
                 offset += a->size();
               }
               return cross_entropy_with_logits(branch_forward(probe_branch, input), labels).loss;
             },
             branch_theta);

    // EWC penalty gradient.
    EwcState ewc = make_ewc_state(net, 2.0 + rng.uniform(), 1.0);
    for (double& f : ewc.fisher) f = rng.uniform(0.0, 2.0);
    std::vector<double> shifted = flatten_parameters(net);
    for (double& v : shifted) v += rng.normal(0.0, 0.2);
    assign_parameters(net, shifted);
    GradientSet ewc_grads = zero_gradients(net);
    ewc_penalized_grads(ewc_grads, net, ewc);
    fd_check(flatten_gradients(ewc_grads),
             [&](const std::vector<double>& theta) {
               assign_parameters(probe, theta);
               return ewc_penalty(probe, ewc);
             },
             flatten_parameters(net));

    // SI penalty gradient.
    SiState si = make_si_state(net, 0.1 + rng.uniform(0.0, 0.2), 0.1);
    for (double& o : si.omega) o = rng.uniform(0.0, 2.0);
    for (double& v : shifted) v += rng.normal(0.0, 0.2);
    assign_parameters(net, shifted);
    GradientSet si_grads = zero_gradients(net);
    si_penalized_grads(si_grads, net, si);
    fd_check(flatten_gradients(si_grads),
             [&](const std::vector<double>& theta) {
               assign_parameters(probe, theta);
               return si_penalty(probe, si);
             },
             flatten_parameters(net));
  }

  outcome.note("worst relative error " + fmt_sci(worst));
  if (worst > tol) outcome.fail("exceeds 1e-5");
  return outcome;
}

Outcome criterion_si_oracle() {
  Outcome outcome;
  // Scripted oracle: L = theta^2 / 2 from theta = 1, three SGD steps, lr 0.1.
  double theta = 1.0, w_oracle = 0.0;
  for (int step = 0; step < 3; ++step) {
    const double g = theta;
    const double delta = -0.1 * g;
    w_oracle += -g * delta;
    theta += delta;
  }
  const double omega_oracle = w_oracle / ((theta - 1.0) * (theta - 1.0) + 0.1);

  SiState state;
  state.path_accum.assign(1, 0.0);
  state.omega.assign(1, 0.0);
  state.theta_start.assign(1, 1.0);
  state.xi = 0.1;
  double sim = 1.0;
  for (int step = 0; step < 3; ++step) {
    const double g = sim;
    const double next = sim - 0.1 * g;
    si_accumulate(state, {g}, {next - sim});
    sim = next;
  }
  const double w_final = state.path_accum[0];
  si_consolidate(state, {sim});

  outcome.note("w=" + fmt(w_final, 12) + " omega=" + fmt(state.omega[0], 12));
  if (std::fabs(w_final - w_oracle) > 1e-12) outcome.fail("w deviates from the scripted oracle");
  if (std::fabs(state.omega[0] - omega_oracle) > 1e-12) {
    outcome.fail("omega deviates from the scripted oracle");
  }
  return outcome;
}

struct FixtureRuns {
  std::vector<RunResult> plasticity_r0;
  std::vector<RunResult> plasticity_r50;
  std::vector<RunResult> esp_r50;
  std::vector<RunResult> stability_r50;
  double seconds = 0.0;
};

FixtureRuns run_behavioral_fixture() {
  FixtureRuns runs;
  const auto start = Clock::now();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const TaskStream stream = generate_gaussian_stream(default_fixture_spec(seed), 5);
    runs.plasticity_r0.push_back(
        run_sequence(stream, fixture_config(Method::kPlasticity, seed, 0.0)));
    runs.plasticity_r50.push_back(
        run_sequence(stream, fixture_config(Method::kPlasticity, seed, 0.5)));
    runs.esp_r50.push_back(run_sequence(stream, fixture_config(Method::kEsp, seed, 0.5)));
    runs.stability_r50.push_back(
        run_sequence(stream, fixture_config(Method::kStability, seed, 0.5)));
  }
  runs.seconds = seconds_since(start);
  return runs;
}

Outcome criterion_forgetting(const FixtureRuns& runs) {
  Outcome outcome;
  double after_first = 0.0, after_last = 0.0;
  for (const RunResult& run : runs.plasticity_r0) {
    after_first += run.accuracy_matrix[0][0];
    after_last += run.accuracy_matrix[4][0];
  }
  after_first /= 3.0;
  after_last /= 3.0;
  const double drop = after_first - after_last;
  outcome.note("task-1 accuracy " + fmt(after_first) + " -> " + fmt(after_last) + " (drop " +
               fmt(drop) + ", fixture wall clock " + fmt(runs.seconds) + " s)");
  if (drop < 30.0) outcome.fail("drop below 30 points");
  if (runs.seconds >= 300.0) outcome.fail("fixture runs exceeded 5 minutes");
  return outcome;
}

Outcome criterion_replay_efficacy(const FixtureRuns& runs) {
  Outcome outcome;
  double with_replay = 0.0, without_replay = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    with_replay += runs.plasticity_r50[i].average_accuracy;
    without_replay += runs.plasticity_r0[i].average_accuracy;
  }
  with_replay /= 3.0;
  without_replay /= 3.0;
  outcome.note("final average " + fmt(without_replay) + " -> " + fmt(with_replay) +
               " with 50% replay");
  if (with_replay - without_replay < 10.0) outcome.fail("gain below 10 points");
  return outcome;
}

Outcome criterion_stability_ordering(const FixtureRuns& runs) {
  Outcome outcome;
  double esp = 0.0, stability = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    esp += runs.esp_r50[i].average_accuracy;
    stability += runs.stability_r50[i].average_accuracy;
  }
  esp /= 3.0;
  stability /= 3.0;
  outcome.note("esp " + fmt(esp) + " vs stability " + fmt(stability));
  if (esp - stability < 5.0) outcome.fail("gap below 5 points");
  return outcome;
}

ExperimentConfig reporting_config(const std::string& method, double fraction,
                                  std::uint64_t seed) {
  nlohmann::json j = {
      {"method", method},
      {"scenario", "all"},
      {"replay_fraction", fraction},
      {"seed", seed},
      {"arch", {{"block_widths", {64, 64, 64, 64}}, {"class_count", 10}}},
      {"optimizer", {{"kind", "sgd"}, {"lr", 1e-3}, {"momentum", 0.9}}},
      {"batch_size", 32},
      {"dataset",
       {{"type", "gaussian"},
        {"tasks", 5},
        {"dims", 16},
        {"train_per_class", 150},
        {"test_per_class", 60}}}};
  return parse_experiment_config(j);
}

Outcome criterion_reporting() {
  Outcome outcome;
  const fs::path root = fs::temp_directory_path() / "esp_acceptance_reports";
  fs::remove_all(root);
  fs::create_directories(root);

  // Per-block mean PF across tasks, reported per replay fraction. The
  // numeric pattern is logged, not asserted.
  for (double fraction : {0.2, 0.5}) {
    const RunOutcome run = run_experiment(reporting_config("esp", fraction, 9), root, false);
    const PfReport report = compute_pf_report(run.dir);
    if (report.block_count != 4 || report.per_task.size() != 5) {
      outcome.fail("pf report shape wrong at fraction " + fmt(fraction, 1));
      continue;
    }
    std::string row = "pf means @" + fmt(fraction, 1) + ":";
    for (double m : report.overall_mean) row += " " + fmt(m, 3);
    outcome.note(row);
  }

  // Backbone/regularizer split per method.
  std::vector<fs::path> dirs;
  for (const char* method : {"esp", "oewc", "si", "stability", "plasticity", "linear"}) {
    dirs.push_back(run_experiment(reporting_config(method, 0.2, 9), root, false).dir);
  }
  const std::vector<TimeReportRow> rows = compute_time_report(dirs);
  for (const TimeReportRow& row : rows) {
    const bool has_regularizer =
        row.method == "esp" || row.method == "oewc" || row.method == "si";
    if (has_regularizer && !(row.regularizer_seconds > 0.0)) {
      outcome.fail(row.method + ": regularizer_seconds not positive");
    }
    if (!has_regularizer && row.regularizer_seconds != 0.0) {
      outcome.fail(row.method + ": regularizer_seconds not zero");
    }
  }
  fs::remove_all(root);
  return outcome;
}

Outcome criterion_determinism() {
  Outcome outcome;
  const fs::path root_a = fs::temp_directory_path() / "esp_acceptance_det_a";
  const fs::path root_b = fs::temp_directory_path() / "esp_acceptance_det_b";
  fs::remove_all(root_a);
  fs::remove_all(root_b);
  const ExperimentConfig config = reporting_config("esp", 0.3, 13);
  const RunOutcome a = run_experiment(config, root_a, false);
  const RunOutcome b = run_experiment(config, root_b, false);
  auto slurp = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  if (slurp(a.dir / "metrics.json") != slurp(b.dir / "metrics.json")) {
    outcome.fail("metrics.json differs between identical runs");
  }
  if (slurp(a.dir / "pf_log.csv") != slurp(b.dir / "pf_log.csv")) {
    outcome.fail("pf_log.csv differs between identical runs");
  }
  outcome.note("metrics.json and pf_log.csv byte-identical");
  fs::remove_all(root_a);
  fs::remove_all(root_b);
  return outcome;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    std::function<Outcome()> run;
  };

  // Behavioral criteria share one set of fixture runs.
  FixtureRuns fixture_runs;
  bool fixture_ready = false;
  auto ensure_fixture = [&]() -> FixtureRuns& {
    if (!fixture_ready) {
      fixture_runs = run_behavioral_fixture();
      fixture_ready = true;
    }
    return fixture_runs;
  };

  const std::vector<Entry> criteria = {
      {"1. PF invariants (10k vectors, monotonicity, <5 s)", criterion_pf_invariants},
      {"2. Plasticity equivalence (pf=1, tau=0, 50 steps bit-identical)",
       criterion_plasticity_equivalence},
      {"3. Freezing equivalence (backward_partial vs zeroed prefix)",
       criterion_freezing_equivalence},
      {"4. Phase isolation (checksums across a 5-task run)", criterion_phase_isolation},
      {"5. Gradient correctness (layers, EWC, SI vs finite differences)",
       criterion_gradient_correctness},
      {"6. SI oracle (1-d quadratic, 1e-12)", criterion_si_oracle},
      {"7. Forgetting reproduction (>=30 point drop, <5 min)",
       [&] { return criterion_forgetting(ensure_fixture()); }},
      {"8. Replay efficacy (>=10 point gain at 50% replay)",
       [&] { return criterion_replay_efficacy(ensure_fixture()); }},
      {"9. Stability ordering (esp >= stability + 5)",
       [&] { return criterion_stability_ordering(ensure_fixture()); }},
      {"10. Reporting machinery (pf report form, time split signs)", criterion_reporting},
      {"11. Determinism (bit-identical metrics.json and pf_log.csv)", criterion_determinism},
  };

  int failures = 0;
  for (const Entry& entry : criteria) {
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome.fail(std::string("exception: ") + e.what());
    }
    std::printf("[%s] %s%s%s\n", outcome.pass ? "PASS" : "FAIL", entry.name,
                outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
