#include "esp/regularize.hpp"

#include <string>

#include "esp/errors.hpp"

namespace esp {

namespace {

void check_flat(const char* op, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " parameters");
  }
}

}  // namespace

StaticFactorSchedule stability_schedule(std::size_t block_count) {
  return {std::vector<double>(block_count, 0.0)};
}

StaticFactorSchedule plasticity_schedule(std::size_t block_count) {
  return {std::vector<double>(block_count, 1.0)};
}

StaticFactorSchedule linear_schedule(std::size_t block_count) {
  if (block_count < 2) {
    throw ConfigError("linear_schedule: needs at least 2 blocks");
  }
  StaticFactorSchedule schedule;
  schedule.factors.resize(block_count);
  for (std::size_t i = 0; i < block_count; ++i) {
    schedule.factors[i] = static_cast<double>(i) / static_cast<double>(block_count - 1);
  }
  return schedule;
}

void static_scale(GradientSet& grads, const StaticFactorSchedule& schedule) {
  if (schedule.factors.size() != grads.per_block.size()) {
    throw ShapeError("static_scale: " + std::to_string(schedule.factors.size()) +
                     " factors for " + std::to_string(grads.per_block.size()) + " blocks");
  }
  for (std::size_t b = 0; b < grads.per_block.size(); ++b) {
    for (auto& pg : grads.per_block[b]) {
      for (double& v : pg.w.values()) v *= schedule.factors[b];
      for (double& v : pg.b.values()) v *= schedule.factors[b];
    }
  }
}

EwcState make_ewc_state(const BlockNetwork& net, double lambda, double gamma) {
  EwcState state;
  state.fisher.assign(param_total(net), 0.0);
  state.anchor = flatten_parameters(net);
  state.lambda = lambda;
  state.gamma = gamma;
  return state;
}

void ewc_consolidate(const BlockNetwork& net, const DenseArray& features,
                     const std::vector<std::size_t>& labels, EwcState& state) {
  if (labels.empty() || features.rows() != labels.size()) {
    throw ConfigError("ewc_consolidate: consolidation sample is empty or inconsistent");
  }
  check_flat("ewc_consolidate", state.fisher, flatten_parameters(net));
  // Empirical Fisher: squared per-example gradients, so examples are pushed
  // through one at a time rather than batch-averaged.
  std::vector<double> fisher_new(state.fisher.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const DenseArray row = take_rows(features, {i});
    const ForwardTrace trace = forward(net, row);
    const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, {labels[i]});
    const std::vector<double> g = flatten_gradients(backward(net, trace, ce.grad_logits));
    for (std::size_t k = 0; k < g.size(); ++k) fisher_new[k] += g[k] * g[k];
  }
  const double n = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < state.fisher.size(); ++k) {
    state.fisher[k] = state.gamma * state.fisher[k] + fisher_new[k] / n;
  }
  state.anchor = flatten_parameters(net);
  state.consolidated = true;
}

double ewc_penalty(const BlockNetwork& net, const EwcState& state) {
  const std::vector<double> theta = flatten_parameters(net);
  check_flat("ewc_penalty", theta, state.anchor);
  double penalty = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double d = theta[k] - state.anchor[k];
    penalty += state.fisher[k] * d * d;
  }
  return 0.5 * state.lambda * penalty;
}

void ewc_penalized_grads(GradientSet& grads, const BlockNetwork& net, const EwcState& state) {
  const std::vector<double> theta = flatten_parameters(net);
  check_flat("ewc_penalized_grads", theta, state.anchor);
  std::vector<double> extra(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    extra[k] = state.lambda * state.fisher[k] * (theta[k] - state.anchor[k]);
  }
  add_flat(grads, extra);
}

SiState make_si_state(const BlockNetwork& net, double c, double xi) {
  SiState state;
  const std::size_t n = param_total(net);
  state.path_accum.assign(n, 0.0);
  state.omega.assign(n, 0.0);
  state.theta_start = flatten_parameters(net);
  state.c = c;
  state.xi = xi;
  return state;
}

void si_accumulate(SiState& state, const std::vector<double>& grads_before_update,
                   const std::vector<double>& delta_theta) {
  check_flat("si_accumulate", grads_before_update, state.path_accum);
  check_flat("si_accumulate", delta_theta, state.path_accum);
  for (std::size_t k = 0; k < state.path_accum.size(); ++k) {
    state.path_accum[k] -= grads_before_update[k] * delta_theta[k];
  }
}

void si_consolidate(SiState& state, const std::vector<double>& theta_end) {
  check_flat("si_consolidate", theta_end, state.theta_start);
  for (std::size_t k = 0; k < state.omega.size(); ++k) {
    const double total_move = theta_end[k] - state.theta_start[k];
    state.omega[k] += state.path_accum[k] / (total_move * total_move + state.xi);
    state.path_accum[k] = 0.0;
  }
  state.theta_start = theta_end;
}

double si_penalty(const BlockNetwork& net, const SiState& state) {
  const std::vector<double> theta = flatten_parameters(net);
  check_flat("si_penalty", theta, state.theta_start);
  double penalty = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double d = theta[k] - state.theta_start[k];
    penalty += state.omega[k] * d * d;
  }
  return state.c * penalty;
}

void si_penalized_grads(GradientSet& grads, const BlockNetwork& net, const SiState& state) {
  const std::vector<double> theta = flatten_parameters(net);
  check_flat("si_penalized_grads", theta, state.theta_start);
  std::vector<double> extra(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    extra[k] = 2.0 * state.c * state.omega[k] * (theta[k] - state.theta_start[k]);
  }
  add_flat(grads, extra);
}

}  // namespace esp
