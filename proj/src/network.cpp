#include "esp/network.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "esp/errors.hpp"

namespace esp {

namespace {

void check_block_count(const BlockNetwork& net) {
  if (net.block_count() < 2) {
    throw ConfigError("BlockNetwork: needs at least 2 blocks, got " +
                      std::to_string(net.block_count()));
  }
}

void check_trace(const BlockNetwork& net, const ForwardTrace& trace) {
  const bool ok = trace.block_outputs.size() == net.block_count() &&
                  trace.layer_inputs.size() == net.block_count() &&
                  trace.layer_pre.size() == net.block_count() &&
                  trace.logits.cols() == net.class_count &&
                  trace.input.cols() == net.input_width();
  if (!ok) throw ShapeError("backward: trace does not match network");
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    if (trace.layer_inputs[b].size() != net.blocks[b].layers.size() ||
        trace.layer_pre[b].size() != net.blocks[b].layers.size() ||
        trace.block_outputs[b].cols() != net.blocks[b].output_width()) {
      throw ShapeError("backward: trace does not match network at block " + std::to_string(b));
    }
  }
}

DenseArray apply_activation(Activation act, const DenseArray& pre) {
  return act == Activation::kRelu ? relu_forward(pre) : pre;
}

}  // namespace

std::size_t Block::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.w.size() + layer.b.size();
  return n;
}

BlockNetwork make_mlp(std::size_t input_width, const std::vector<std::size_t>& block_widths,
                      std::size_t class_count, Rng& rng) {
  if (block_widths.size() < 2) {
    throw ConfigError("make_mlp: block_widths needs at least 2 entries, got " +
                      std::to_string(block_widths.size()));
  }
  if (input_width == 0 || class_count == 0) {
    throw ConfigError("make_mlp: input_width and class_count must be positive");
  }
  auto init_layer = [&rng](std::size_t in, std::size_t out, Activation act) {
    LinearLayer layer{DenseArray(in, out), DenseArray(1, out), act};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : layer.w.values()) v = rng.normal(0.0, scale);
    return layer;
  };
  BlockNetwork net;
  net.class_count = class_count;
  std::size_t in = input_width;
  for (std::size_t width : block_widths) {
    Block block;
    block.layers.push_back(init_layer(in, width, Activation::kRelu));
    net.blocks.push_back(std::move(block));
    in = width;
  }
  net.decoder = init_layer(in, class_count, Activation::kIdentity);
  return net;
}

ForwardTrace forward(const BlockNetwork& net, const DenseArray& x) {
  check_block_count(net);
  if (x.rows() == 0) throw ShapeError("forward: empty batch");
  if (x.cols() != net.input_width()) {
    throw shape_mismatch("forward", x.rows(), x.cols(), net.input_width(),
                         net.blocks.front().layers.front().w.cols());
  }
  ForwardTrace trace;
  trace.input = x;
  trace.layer_inputs.resize(net.block_count());
  trace.layer_pre.resize(net.block_count());
  DenseArray current = x;
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    for (const auto& layer : net.blocks[b].layers) {
      trace.layer_inputs[b].push_back(current);
      DenseArray pre = linear_forward(current, layer.w, layer.b);
      trace.layer_pre[b].push_back(pre);
      current = apply_activation(layer.act, pre);
    }
    trace.block_outputs.push_back(current);
  }
  trace.logits = linear_forward(current, net.decoder.w, net.decoder.b);
  return trace;
}

GradientSet zero_gradients(const BlockNetwork& net) {
  GradientSet grads;
  grads.per_block.resize(net.block_count());
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    for (const auto& layer : net.blocks[b].layers) {
      grads.per_block[b].push_back({DenseArray(layer.w.rows(), layer.w.cols()),
                                    DenseArray(1, layer.b.cols())});
    }
  }
  grads.decoder = {DenseArray(net.decoder.w.rows(), net.decoder.w.cols()),
                   DenseArray(1, net.decoder.b.cols())};
  return grads;
}

GradientSet backward_partial(const BlockNetwork& net, const ForwardTrace& trace,
                             const DenseArray& grad_logits, std::size_t stop_below) {
  check_trace(net, trace);
  if (stop_below > net.block_count()) {
    throw ConfigError("backward_partial: stop_below " + std::to_string(stop_below) +
                      " out of range for " + std::to_string(net.block_count()) + " blocks");
  }
  if (!grad_logits.same_shape(trace.logits)) {
    throw shape_mismatch("backward_partial: grad_logits", grad_logits.rows(), grad_logits.cols(),
                         trace.logits.rows(), trace.logits.cols());
  }
  GradientSet grads = zero_gradients(net);
  LinearGrads dec = linear_backward(trace.block_outputs.back(), net.decoder.w, grad_logits);
  grads.decoder.w = std::move(dec.w);
  grads.decoder.b = std::move(dec.b);
  DenseArray upstream = std::move(dec.x);
  for (std::size_t b = net.block_count(); b-- > stop_below;) {
    const Block& block = net.blocks[b];
    for (std::size_t l = block.layers.size(); l-- > 0;) {
      const LinearLayer& layer = block.layers[l];
      if (layer.act == Activation::kRelu) {
        upstream = relu_backward(trace.layer_pre[b][l], upstream);
      }
      LinearGrads lg = linear_backward(trace.layer_inputs[b][l], layer.w, upstream);
      grads.per_block[b][l].w = std::move(lg.w);
      grads.per_block[b][l].b = std::move(lg.b);
      upstream = std::move(lg.x);
    }
  }
  return grads;
}

GradientSet backward(const BlockNetwork& net, const ForwardTrace& trace,
                     const DenseArray& grad_logits) {
  return backward_partial(net, trace, grad_logits, 0);
}

std::size_t param_total(const BlockNetwork& net) {
  std::size_t n = 0;
  for (const auto& block : net.blocks) n += block.param_count();
  return n + net.decoder.w.size() + net.decoder.b.size();
}

std::vector<double> flatten_parameters(const BlockNetwork& net) {
  std::vector<double> flat;
  flat.reserve(param_total(net));
  auto push = [&flat](const DenseArray& a) {
    flat.insert(flat.end(), a.values().begin(), a.values().end());
  };
  for (const auto& block : net.blocks) {
    for (const auto& layer : block.layers) {
      push(layer.w);
      push(layer.b);
    }
  }
  push(net.decoder.w);
  push(net.decoder.b);
  return flat;
}

void assign_parameters(BlockNetwork& net, const std::vector<double>& flat) {
  if (flat.size() != param_total(net)) {
    throw ShapeError("assign_parameters: got " + std::to_string(flat.size()) + " values for " +
                     std::to_string(param_total(net)) + " parameters");
  }
  std::size_t offset = 0;
  auto pull = [&flat, &offset](DenseArray& a) {
    std::memcpy(a.data(), flat.data() + offset, a.size() * sizeof(double));
    offset += a.size();
  };
  for (auto& block : net.blocks) {
    for (auto& layer : block.layers) {
      pull(layer.w);
      pull(layer.b);
    }
  }
  pull(net.decoder.w);
  pull(net.decoder.b);
}

std::vector<double> flatten_gradients(const GradientSet& grads) {
  std::vector<double> flat;
  auto push = [&flat](const DenseArray& a) {
    flat.insert(flat.end(), a.values().begin(), a.values().end());
  };
  for (const auto& block : grads.per_block) {
    for (const auto& pg : block) {
      push(pg.w);
      push(pg.b);
    }
  }
  push(grads.decoder.w);
  push(grads.decoder.b);
  return flat;
}

void add_flat(GradientSet& grads, const std::vector<double>& flat) {
  std::size_t offset = 0;
  auto add = [&flat, &offset](DenseArray& a) {
    if (offset + a.size() > flat.size()) {
      throw ShapeError("add_flat: vector shorter than gradient set");
    }
    for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] += flat[offset + i];
    offset += a.size();
  };
  for (auto& block : grads.per_block) {
    for (auto& pg : block) {
      add(pg.w);
      add(pg.b);
    }
  }
  add(grads.decoder.w);
  add(grads.decoder.b);
  if (offset != flat.size()) {
    throw ShapeError("add_flat: vector longer than gradient set");
  }
}

std::uint64_t parameter_checksum(const BlockNetwork& net) {
  const std::vector<double> flat = flatten_parameters(net);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(flat.data());
  for (std::size_t i = 0; i < flat.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace esp
