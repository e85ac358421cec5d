#pragma once

#include <cstddef>
#include <vector>

#include "esp/array.hpp"

namespace esp {

// out = x * w + b, bias broadcast over the batch. x is batch x in,
// w is in x out, b is 1 x out.
DenseArray linear_forward(const DenseArray& x, const DenseArray& w, const DenseArray& b);

struct LinearGrads {
  DenseArray x;  // batch x in
  DenseArray w;  // in x out
  DenseArray b;  // 1 x out, column sums of grad_out
};

LinearGrads linear_backward(const DenseArray& x, const DenseArray& w, const DenseArray& grad_out);

DenseArray relu_forward(const DenseArray& x);

// Masks grad_out wherever the forward input was <= 0.
DenseArray relu_backward(const DenseArray& x, const DenseArray& grad_out);

// Row-wise softmax computed with max subtraction.
DenseArray softmax(const DenseArray& logits);

struct CrossEntropyResult {
  double loss = 0.0;       // mean over the batch
  DenseArray grad_logits;  // (softmax - onehot) / batch
};

CrossEntropyResult cross_entropy_with_logits(const DenseArray& logits,
                                             const std::vector<std::size_t>& labels);

}  // namespace esp
