#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "esp/array.hpp"
#include "esp/network.hpp"
#include "esp/rng.hpp"

namespace esp::test {

// Central finite differences of a scalar function over a flat vector.
// Independent of every analytic backward path it is used to check.
inline std::vector<double> finite_difference(std::vector<double> theta,
                                             const std::function<double(const std::vector<double>&)>& f,
                                             double h = 1e-5) {
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double original = theta[i];
    theta[i] = original + h;
    const double up = f(theta);
    theta[i] = original - h;
    const double down = f(theta);
    theta[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// |a - f| <= tol * max(1, |a|, |f|) per entry: the usual gradcheck metric.
inline bool gradients_close(const std::vector<double>& analytic, const std::vector<double>& fd,
                            double tol, double* worst = nullptr) {
  if (analytic.size() != fd.size()) return false;
  double max_err = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({1.0, std::fabs(analytic[i]), std::fabs(fd[i])});
    max_err = std::max(max_err, std::fabs(analytic[i] - fd[i]) / scale);
  }
  if (worst != nullptr) *worst = max_err;
  return max_err <= tol;
}

inline DenseArray random_array(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseArray a(rows, cols);
  for (double& v : a.values()) v = rng.normal(0.0, scale);
  return a;
}

inline std::vector<std::size_t> random_labels(std::size_t count, std::size_t classes, Rng& rng) {
  std::vector<std::size_t> labels(count);
  for (auto& l : labels) l = rng.index(classes);
  return labels;
}

// A block made of one linear layer with a chosen activation, for hand-built
// fixtures.
inline Block single_layer_block(DenseArray w, DenseArray b, Activation act) {
  Block block;
  block.layers.push_back({std::move(w), std::move(b), act});
  return block;
}

}  // namespace esp::test
