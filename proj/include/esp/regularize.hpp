#pragma once

#include <cstddef>
#include <vector>

#include "esp/network.hpp"

namespace esp {

// Fixed per-block gradient factors shared by the Stability, Plasticity and
// Linear Plasticity baselines.
struct StaticFactorSchedule {
  std::vector<double> factors;  // one per block, each in [0, 1]
};

StaticFactorSchedule stability_schedule(std::size_t block_count);   // all 0
StaticFactorSchedule plasticity_schedule(std::size_t block_count);  // all 1
StaticFactorSchedule linear_schedule(std::size_t block_count);      // i / (B-1)

// Multiplies block i's gradients by factors[i]; the decoder is untouched.
void static_scale(GradientSet& grads, const StaticFactorSchedule& schedule);

// Online EWC: decayed running empirical Fisher with the anchor at the last
// consolidation point. Quadratic penalty (lambda/2) * sum F_j (theta_j -
// anchor_j)^2.
struct EwcState {
  std::vector<double> fisher;  // per parameter, >= 0
  std::vector<double> anchor;
  double lambda = 2000.0;
  double gamma = 1.0;  // online decay of the running Fisher
  bool consolidated = false;
};

EwcState make_ewc_state(const BlockNetwork& net, double lambda, double gamma);

// F_new = mean over the sample of squared per-example loss gradients;
// fisher <- gamma * fisher + F_new, anchor <- current parameters.
void ewc_consolidate(const BlockNetwork& net, const DenseArray& features,
                     const std::vector<std::size_t>& labels, EwcState& state);

double ewc_penalty(const BlockNetwork& net, const EwcState& state);
void ewc_penalized_grads(GradientSet& grads, const BlockNetwork& net, const EwcState& state);

// Synaptic intelligence: per-parameter importance from the running path
// integral of -grad * delta_theta, consolidated into a quadratic surrogate
// c * sum omega_j (theta_j - theta_start_j)^2 at task boundaries.
struct SiState {
  std::vector<double> path_accum;   // w_k, reset each consolidation
  std::vector<double> omega;        // importance, never negative on descent
  std::vector<double> theta_start;  // anchor of the current task
  double c = 0.1;
  double xi = 0.1;  // damping in the consolidation denominator
};

SiState make_si_state(const BlockNetwork& net, double c, double xi);

// w_k += -g_k * delta_theta_k, with g the raw task-loss gradient (penalty
// term excluded).
void si_accumulate(SiState& state, const std::vector<double>& grads_before_update,
                   const std::vector<double>& delta_theta);

// omega_k += w_k / ((theta_end_k - theta_start_k)^2 + xi); w resets and the
// anchor moves to theta_end.
void si_consolidate(SiState& state, const std::vector<double>& theta_end);

double si_penalty(const BlockNetwork& net, const SiState& state);
void si_penalized_grads(GradientSet& grads, const BlockNetwork& net, const SiState& state);

}  // namespace esp
