#include "esp/optimizer.hpp"

#include <cmath>
#include <string>

#include "esp/errors.hpp"

namespace esp {

namespace {

std::size_t block_param_count(const Block& block) { return block.param_count(); }

std::vector<double> flatten_block(const Block& block) {
  std::vector<double> flat;
  flat.reserve(block.param_count());
  for (const auto& layer : block.layers) {
    flat.insert(flat.end(), layer.w.values().begin(), layer.w.values().end());
    flat.insert(flat.end(), layer.b.values().begin(), layer.b.values().end());
  }
  return flat;
}

void assign_block(Block& block, const std::vector<double>& flat) {
  std::size_t offset = 0;
  for (auto& layer : block.layers) {
    for (std::size_t i = 0; i < layer.w.size(); ++i) layer.w.values()[i] = flat[offset + i];
    offset += layer.w.size();
    for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b.values()[i] = flat[offset + i];
    offset += layer.b.size();
  }
}

std::vector<double> flatten_block_grads(const std::vector<ParamGrads>& grads) {
  std::vector<double> flat;
  for (const auto& pg : grads) {
    flat.insert(flat.end(), pg.w.values().begin(), pg.w.values().end());
    flat.insert(flat.end(), pg.b.values().begin(), pg.b.values().end());
  }
  return flat;
}

void check_shapes(const BlockNetwork& net, const GradientSet& grads) {
  if (grads.per_block.size() != net.block_count()) {
    throw ShapeError("apply_update: gradient set has " + std::to_string(grads.per_block.size()) +
                     " blocks, network has " + std::to_string(net.block_count()));
  }
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    if (grads.per_block[b].size() != net.blocks[b].layers.size()) {
      throw ShapeError("apply_update: layer count mismatch at block " + std::to_string(b));
    }
    for (std::size_t l = 0; l < grads.per_block[b].size(); ++l) {
      if (!grads.per_block[b][l].w.same_shape(net.blocks[b].layers[l].w) ||
          !grads.per_block[b][l].b.same_shape(net.blocks[b].layers[l].b)) {
        throw ShapeError("apply_update: gradient shape mismatch at block " + std::to_string(b));
      }
    }
  }
  if (!grads.decoder.w.same_shape(net.decoder.w) || !grads.decoder.b.same_shape(net.decoder.b)) {
    throw ShapeError("apply_update: decoder gradient shape mismatch");
  }
}

}  // namespace

FlatOptimizer::FlatOptimizer(const OptimizerConfig& cfg, std::size_t n) : config(cfg) {
  if (config.kind == OptimizerKind::kSgd) {
    if (config.momentum != 0.0) velocity.assign(n, 0.0);
  } else {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
}

void FlatOptimizer::step(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("FlatOptimizer::step: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  }
  const double lr = config.lr;
  if (config.kind == OptimizerKind::kSgd) {
    if (config.momentum == 0.0) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    } else {
      const double mu = config.momentum;
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = mu * velocity[i] + grads[i];
        params[i] -= lr * velocity[i];
      }
    }
    return;
  }
  ++steps;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(steps));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Optimizer make_optimizer(const BlockNetwork& net, const OptimizerConfig& config) {
  Optimizer opt;
  opt.config = config;
  for (const auto& block : net.blocks) {
    opt.groups.emplace_back(config, block_param_count(block));
  }
  opt.groups.emplace_back(config, net.decoder.w.size() + net.decoder.b.size());
  return opt;
}

void apply_update(BlockNetwork& net, const GradientSet& grads, Optimizer& opt,
                  std::size_t frozen_below) {
  check_shapes(net, grads);
  if (opt.groups.size() != net.block_count() + 1) {
    throw ShapeError("apply_update: optimizer built for a different network");
  }
  for (std::size_t b = frozen_below; b < net.block_count(); ++b) {
    std::vector<double> params = flatten_block(net.blocks[b]);
    opt.groups[b].step(params, flatten_block_grads(grads.per_block[b]));
    assign_block(net.blocks[b], params);
  }
  std::vector<double> dec(net.decoder.w.values());
  dec.insert(dec.end(), net.decoder.b.values().begin(), net.decoder.b.values().end());
  std::vector<double> dec_grads(grads.decoder.w.values());
  dec_grads.insert(dec_grads.end(), grads.decoder.b.values().begin(),
                   grads.decoder.b.values().end());
  opt.groups.back().step(dec, dec_grads);
  for (std::size_t i = 0; i < net.decoder.w.size(); ++i) net.decoder.w.values()[i] = dec[i];
  for (std::size_t i = 0; i < net.decoder.b.size(); ++i) {
    net.decoder.b.values()[i] = dec[net.decoder.w.size() + i];
  }
}

}  // namespace esp
