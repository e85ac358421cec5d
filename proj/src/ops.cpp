#include "esp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "esp/errors.hpp"

namespace esp {

DenseArray linear_forward(const DenseArray& x, const DenseArray& w, const DenseArray& b) {
  if (x.cols() != w.rows()) {
    throw shape_mismatch("linear_forward", x.rows(), x.cols(), w.rows(), w.cols());
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw shape_mismatch("linear_forward: bias", b.rows(), b.cols(), 1, w.cols());
  }
  const std::size_t batch = x.rows(), in = x.cols(), out_w = w.cols();
  DenseArray out(batch, out_w);
  for (std::size_t r = 0; r < batch; ++r) {
    double* out_row = out.row(r);
    for (std::size_t c = 0; c < out_w; ++c) out_row[c] = b(0, c);
    const double* x_row = x.row(r);
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = x_row[k];
      if (xv == 0.0) continue;
      const double* w_row = w.row(k);
      for (std::size_t c = 0; c < out_w; ++c) out_row[c] += xv * w_row[c];
    }
  }
  return out;
}

LinearGrads linear_backward(const DenseArray& x, const DenseArray& w, const DenseArray& grad_out) {
  if (x.cols() != w.rows()) {
    throw shape_mismatch("linear_backward", x.rows(), x.cols(), w.rows(), w.cols());
  }
  if (grad_out.rows() != x.rows() || grad_out.cols() != w.cols()) {
    throw shape_mismatch("linear_backward: grad_out", grad_out.rows(), grad_out.cols(), x.rows(),
                         w.cols());
  }
  const std::size_t batch = x.rows(), in = x.cols(), out_w = w.cols();
  LinearGrads g{DenseArray(batch, in), DenseArray(in, out_w), DenseArray(1, out_w)};
  for (std::size_t r = 0; r < batch; ++r) {
    const double* x_row = x.row(r);
    const double* go_row = grad_out.row(r);
    double* gx_row = g.x.row(r);
    for (std::size_t c = 0; c < out_w; ++c) g.b(0, c) += go_row[c];
    // grad_w += x^T grad_out; grad_x = grad_out w^T
    for (std::size_t k = 0; k < in; ++k) {
      const double* w_row = w.row(k);
      double* gw_row = g.w.row(k);
      const double xv = x_row[k];
      double acc = 0.0;
      for (std::size_t c = 0; c < out_w; ++c) {
        gw_row[c] += xv * go_row[c];
        acc += go_row[c] * w_row[c];
      }
      gx_row[k] = acc;
    }
  }
  return g;
}

DenseArray relu_forward(const DenseArray& x) {
  DenseArray out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

DenseArray relu_backward(const DenseArray& x, const DenseArray& grad_out) {
  if (!x.same_shape(grad_out)) {
    throw shape_mismatch("relu_backward", x.rows(), x.cols(), grad_out.rows(), grad_out.cols());
  }
  DenseArray out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.values()[i] = x.values()[i] > 0.0 ? grad_out.values()[i] : 0.0;
  }
  return out;
}

DenseArray softmax(const DenseArray& logits) {
  DenseArray out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* in_row = logits.row(r);
    double* out_row = out.row(r);
    const double mx = *std::max_element(in_row, in_row + logits.cols());
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out_row[c] = std::exp(in_row[c] - mx);
      sum += out_row[c];
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) out_row[c] /= sum;
  }
  return out;
}

CrossEntropyResult cross_entropy_with_logits(const DenseArray& logits,
                                             const std::vector<std::size_t>& labels) {
  if (labels.size() != logits.rows()) {
    throw shape_mismatch("cross_entropy_with_logits", logits.rows(), logits.cols(), labels.size(),
                         1);
  }
  const std::size_t batch = logits.rows(), classes = logits.cols();
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] >= classes) {
      throw std::out_of_range("cross_entropy_with_logits: label " + std::to_string(labels[r]) +
                              " out of range for " + std::to_string(classes) + " classes");
    }
  }
  CrossEntropyResult result;
  result.grad_logits = softmax(logits);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    // log softmax evaluated directly for stability.
    const double* row = logits.row(r);
    const double mx = *std::max_element(row, row + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
    loss -= row[labels[r]] - mx - std::log(sum);
    result.grad_logits(r, labels[r]) -= 1.0;
  }
  result.loss = loss / static_cast<double>(batch);
  for (double& v : result.grad_logits.values()) v /= static_cast<double>(batch);
  return result;
}

}  // namespace esp
