#include "esp/plasticity.hpp"

#include <cmath>
#include <string>

#include "esp/errors.hpp"

namespace esp {

namespace {

std::vector<double> flatten_branch(const BranchLayer& branch) {
  std::vector<double> flat;
  flat.reserve(branch.param_count());
  for (const DenseArray* a : {&branch.hidden.w, &branch.hidden.b, &branch.out.w, &branch.out.b}) {
    flat.insert(flat.end(), a->values().begin(), a->values().end());
  }
  return flat;
}

void assign_branch(BranchLayer& branch, const std::vector<double>& flat) {
  std::size_t offset = 0;
  for (DenseArray* a : {&branch.hidden.w, &branch.hidden.b, &branch.out.w, &branch.out.b}) {
    for (std::size_t i = 0; i < a->size(); ++i) a->values()[i] = flat[offset + i];
    offset += a->size();
  }
}

}  // namespace

BranchSet make_branches(const BlockNetwork& net, std::size_t hidden_width, Rng& rng) {
  BranchSet set;
  auto init_layer = [&rng](std::size_t in, std::size_t out, Activation act) {
    LinearLayer layer{DenseArray(in, out), DenseArray(1, out), act};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : layer.w.values()) v = rng.normal(0.0, scale);
    return layer;
  };
  for (const auto& block : net.blocks) {
    const std::size_t width = block.output_width();
    const std::size_t hidden = hidden_width == 0 ? width : hidden_width;
    BranchLayer branch;
    branch.hidden = init_layer(width, hidden, Activation::kRelu);
    branch.out = init_layer(hidden, net.class_count, Activation::kIdentity);
    set.branches.push_back(std::move(branch));
  }
  return set;
}

DenseArray branch_forward(const BranchLayer& branch, const DenseArray& block_output) {
  const DenseArray h = relu_forward(linear_forward(block_output, branch.hidden.w, branch.hidden.b));
  return linear_forward(h, branch.out.w, branch.out.b);
}

double branch_entropy(const DenseArray& branch_logits) {
  const DenseArray p = softmax(branch_logits);
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const double* row = p.row(r);
    double h = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      if (row[c] > 0.0) h -= row[c] * std::log(row[c]);
    }
    total += h;
  }
  return total / static_cast<double>(p.rows());
}

PlasticityFactors plasticity_factors(const EntropyVector& entropies) {
  const std::size_t blocks = entropies.e.size();
  if (blocks < 2) {
    throw ConfigError("plasticity_factors: needs at least 2 blocks, got " +
                      std::to_string(blocks));
  }
  const DenseArray e(1, blocks, entropies.e);
  const DenseArray share = softmax(e);
  PlasticityFactors factors;
  factors.pf.resize(blocks);
  for (std::size_t i = 0; i < blocks; ++i) factors.pf[i] = 1.0 - share(0, i);
  return factors;
}

void scale_gradients(GradientSet& grads, const PlasticityFactors& pf) {
  if (pf.pf.size() != grads.per_block.size()) {
    throw ShapeError("scale_gradients: " + std::to_string(pf.pf.size()) + " factors for " +
                     std::to_string(grads.per_block.size()) + " blocks");
  }
  for (std::size_t b = 0; b < grads.per_block.size(); ++b) {
    const double factor = pf.pf[b];
    for (auto& pg : grads.per_block[b]) {
      for (double& v : pg.w.values()) v *= factor;
      for (double& v : pg.b.values()) v *= factor;
    }
  }
}

std::size_t freeze_schedule(PlasticityFactors& pf, double tau) {
  if (tau < 0.0) throw ConfigError("freeze_schedule: tau must be >= 0");
  std::size_t k = 0;
  while (k < pf.pf.size() && pf.pf[k] <= tau) ++k;
  for (std::size_t i = 0; i < k; ++i) pf.pf[i] = 0.0;
  return k;
}

void fit_branches(const BlockNetwork& net, BranchSet& branches, const DenseArray& features,
                  const std::vector<std::size_t>& labels, const BranchFitOptions& options,
                  Rng& rng) {
  if (branches.branches.size() != net.block_count()) {
    throw ShapeError("fit_branches: " + std::to_string(branches.branches.size()) +
                     " branches for " + std::to_string(net.block_count()) + " blocks");
  }
  if (labels.empty() || features.rows() != labels.size()) {
    throw ConfigError("fit_branches: fit data is empty or inconsistent");
  }
  const std::size_t count = labels.size();
  const std::size_t batch = options.batch_size == 0 ? count : options.batch_size;

  std::vector<FlatOptimizer> opts;
  for (auto& branch : branches.branches) {
    branch.frozen = false;
    opts.emplace_back(options.optimizer, branch.param_count());
  }

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < count; start += batch) {
      const std::size_t end = std::min(start + batch, count);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      const DenseArray bx = take_rows(features, idx);
      std::vector<std::size_t> by(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) by[i] = labels[idx[i]];

      const ForwardTrace trace = forward(net, bx);
      for (std::size_t b = 0; b < branches.branches.size(); ++b) {
        BranchLayer& branch = branches.branches[b];
        const DenseArray& input = trace.block_outputs[b];
        const DenseArray pre = linear_forward(input, branch.hidden.w, branch.hidden.b);
        const DenseArray h = relu_forward(pre);
        const DenseArray logits = linear_forward(h, branch.out.w, branch.out.b);
        const CrossEntropyResult ce = cross_entropy_with_logits(logits, by);
        LinearGrads out_grads = linear_backward(h, branch.out.w, ce.grad_logits);
        const DenseArray grad_pre = relu_backward(pre, out_grads.x);
        LinearGrads hidden_grads = linear_backward(input, branch.hidden.w, grad_pre);

        std::vector<double> params = flatten_branch(branch);
        std::vector<double> grads;
        grads.reserve(params.size());
        for (const DenseArray* a : {&hidden_grads.w, &hidden_grads.b, &out_grads.w, &out_grads.b}) {
          grads.insert(grads.end(), a->values().begin(), a->values().end());
        }
        opts[b].step(params, grads);
        assign_branch(branch, params);
      }
    }
  }
  for (auto& branch : branches.branches) branch.frozen = true;
}

std::uint64_t branch_checksum(const BranchSet& branches) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const DenseArray& a) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(a.data());
    for (std::size_t i = 0; i < a.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& branch : branches.branches) {
    mix(branch.hidden.w);
    mix(branch.hidden.b);
    mix(branch.out.w);
    mix(branch.out.b);
  }
  return h;
}

EspStepResult esp_step(BlockNetwork& net, const BranchSet& branches, const DenseArray& x,
                       const std::vector<std::size_t>& labels, Optimizer& opt, double tau,
                       const std::vector<double>* pf_override) {
  if (branches.branches.size() != net.block_count()) {
    throw ShapeError("esp_step: branch count does not match block count");
  }
  for (const auto& branch : branches.branches) {
    if (!branch.frozen) throw ConfigError("esp_step: branches must be fitted and frozen first");
  }

  EspStepResult result;
  const ForwardTrace trace = forward(net, x);

  result.entropies.e.reserve(net.block_count());
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    result.entropies.e.push_back(
        branch_entropy(branch_forward(branches.branches[b], trace.block_outputs[b])));
  }
  if (pf_override != nullptr) {
    if (pf_override->size() != net.block_count()) {
      throw ShapeError("esp_step: pf override length does not match block count");
    }
    result.pf.pf = *pf_override;
  } else {
    result.pf = plasticity_factors(result.entropies);
  }
  result.frozen_below = freeze_schedule(result.pf, tau);

  const CrossEntropyResult ce = cross_entropy_with_logits(trace.logits, labels);
  result.loss = ce.loss;
  GradientSet grads = backward_partial(net, trace, ce.grad_logits, result.frozen_below);
  scale_gradients(grads, result.pf);
  apply_update(net, grads, opt, result.frozen_below);
  return result;
}

}  // namespace esp
