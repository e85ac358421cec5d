#pragma once

#include <cstdint>
#include <vector>

#include "esp/network.hpp"

namespace esp {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd only; 0 disables
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Flat per-parameter state for one parameter group (a block, a branch, the
// decoder). Step count lives with the group so skipping a frozen group does
// not advance its Adam bias correction.
struct FlatOptimizer {
  OptimizerConfig config;
  std::vector<double> velocity;  // sgd momentum
  std::vector<double> m, v;      // adam moments
  std::uint64_t steps = 0;

  FlatOptimizer() = default;
  FlatOptimizer(const OptimizerConfig& cfg, std::size_t n);
  void step(std::vector<double>& params, const std::vector<double>& grads);
};

// Optimizer state aligned to a BlockNetwork: one group per block plus one for
// the decoder, in enumeration order.
struct Optimizer {
  OptimizerConfig config;
  std::vector<FlatOptimizer> groups;  // B entries then the decoder
};

Optimizer make_optimizer(const BlockNetwork& net, const OptimizerConfig& config);

// One update step. Blocks below frozen_below are skipped entirely: their
// parameters and optimizer state stay bit-identical. The decoder always
// updates.
void apply_update(BlockNetwork& net, const GradientSet& grads, Optimizer& opt,
                  std::size_t frozen_below = 0);

}  // namespace esp
