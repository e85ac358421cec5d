#pragma once

#include <cstdint>
#include <vector>

#include "esp/array.hpp"
#include "esp/ops.hpp"
#include "esp/rng.hpp"

namespace esp {

enum class Activation { kIdentity, kRelu };

struct LinearLayer {
  DenseArray w;  // in x out
  DenseArray b;  // 1 x out
  Activation act = Activation::kRelu;
};

// One encoder block: a short stack of (linear, activation) layers. Parameter
// enumeration order is fixed: layers in order, weight before bias. Every
// consumer of per-parameter state (optimizers, regularizers, checkpoints)
// relies on that order.
struct Block {
  std::vector<LinearLayer> layers;

  std::size_t input_width() const { return layers.front().w.rows(); }
  std::size_t output_width() const { return layers.back().w.cols(); }
  std::size_t param_count() const;
};

struct BlockNetwork {
  std::vector<Block> blocks;  // the encoder, B >= 2
  LinearLayer decoder;        // identity activation, one head over all classes
  std::size_t class_count = 0;

  std::size_t input_width() const { return blocks.front().input_width(); }
  std::size_t block_count() const { return blocks.size(); }
};

// He-initialised MLP with one (linear, relu) pair per entry of block_widths.
BlockNetwork make_mlp(std::size_t input_width, const std::vector<std::size_t>& block_widths,
                      std::size_t class_count, Rng& rng);

struct ForwardTrace {
  DenseArray input;
  std::vector<DenseArray> block_outputs;  // f_i(x): post-activation, fed to block i+1
  DenseArray logits;
  // Caches for the backward pass.
  std::vector<std::vector<DenseArray>> layer_inputs;  // input to each linear
  std::vector<std::vector<DenseArray>> layer_pre;     // pre-activation values
};

ForwardTrace forward(const BlockNetwork& net, const DenseArray& x);

struct ParamGrads {
  DenseArray w;
  DenseArray b;
};

struct GradientSet {
  std::vector<std::vector<ParamGrads>> per_block;  // mirrors net.blocks
  ParamGrads decoder;
};

GradientSet backward(const BlockNetwork& net, const ForwardTrace& trace,
                     const DenseArray& grad_logits);

// Full chain rule for blocks >= stop_below; gradients for blocks below it are
// left exactly zero and their computation is skipped. stop_below == 0
// reproduces backward bit for bit.
GradientSet backward_partial(const BlockNetwork& net, const ForwardTrace& trace,
                             const DenseArray& grad_logits, std::size_t stop_below);

GradientSet zero_gradients(const BlockNetwork& net);

std::size_t param_total(const BlockNetwork& net);
std::vector<double> flatten_parameters(const BlockNetwork& net);
void assign_parameters(BlockNetwork& net, const std::vector<double>& flat);
std::vector<double> flatten_gradients(const GradientSet& grads);

// Adds a flattened vector (parameter enumeration order) onto the gradients.
void add_flat(GradientSet& grads, const std::vector<double>& flat);

// FNV-1a over the raw parameter bytes, for bit-identity checks.
std::uint64_t parameter_checksum(const BlockNetwork& net);

}  // namespace esp
