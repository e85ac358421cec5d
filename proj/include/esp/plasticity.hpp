#pragma once

#include <cstddef>
#include <vector>

#include "esp/network.hpp"
#include "esp/optimizer.hpp"

namespace esp {

// Two-layer classifier attached to one encoder block's output. It exists only
// to measure how confidently that block's representation already predicts the
// label; it is never part of the inference path.
struct BranchLayer {
  LinearLayer hidden;  // block_width x hidden, relu
  LinearLayer out;     // hidden x class_count, identity
  bool frozen = false;

  std::size_t param_count() const {
    return hidden.w.size() + hidden.b.size() + out.w.size() + out.b.size();
  }
};

// Exactly one branch per encoder block.
struct BranchSet {
  std::vector<BranchLayer> branches;
};

// hidden_width == 0 defaults to each block's own output width.
BranchSet make_branches(const BlockNetwork& net, std::size_t hidden_width, Rng& rng);

DenseArray branch_forward(const BranchLayer& branch, const DenseArray& block_output);

// Shannon entropy (nats) of softmax(branch_logits), averaged over the batch.
// Always in [0, ln C].
double branch_entropy(const DenseArray& branch_logits);

struct EntropyVector {
  std::vector<double> e;  // one per block, nats
};

struct PlasticityFactors {
  std::vector<double> pf;  // one per block
};

// pf[i] = 1 - softmax(e)[i]. Needs at least two blocks (a single block would
// always get factor zero). Lower entropy gives a strictly higher factor and
// the factors always sum to B-1.
PlasticityFactors plasticity_factors(const EntropyVector& entropies);

// Multiplies block i's gradients elementwise by pf[i]. Decoder gradients are
// never scaled.
void scale_gradients(GradientSet& grads, const PlasticityFactors& pf);

// Returns the maximal k such that pf[0..k) are all <= tau, and forces that
// prefix to exactly zero. Only a prefix freezes: a low factor above an active
// block is scaled, not skipped, because stopping backprop there would save
// nothing.
std::size_t freeze_schedule(PlasticityFactors& pf, double tau);

struct BranchFitOptions {
  std::size_t epochs = 1;
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
};

// Trains every branch independently against ground truth on the frozen
// network's block outputs. The backbone is untouchable through the const
// reference; branches come back frozen.
void fit_branches(const BlockNetwork& net, BranchSet& branches, const DenseArray& features,
                  const std::vector<std::size_t>& labels, const BranchFitOptions& options,
                  Rng& rng);

std::uint64_t branch_checksum(const BranchSet& branches);

struct EspStepResult {
  PlasticityFactors pf;  // the exact factors used for scaling
  EntropyVector entropies;
  double loss = 0.0;
  std::size_t frozen_below = 0;
};

// One training iteration: forward trace, per-block branch entropies,
// plasticity factors, prefix freeze, partial backward, gradient scaling,
// update. pf_override (a test hook) replaces the computed factors before the
// freeze schedule runs.
EspStepResult esp_step(BlockNetwork& net, const BranchSet& branches, const DenseArray& x,
                       const std::vector<std::size_t>& labels, Optimizer& opt, double tau,
                       const std::vector<double>* pf_override = nullptr);

}  // namespace esp
