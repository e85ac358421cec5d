#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace esp {

// Row-major dense matrix of doubles. Row vectors are 1xN; every piece of
// numeric state in the repo (inputs, weights, activations, gradients) is one
// of these.
class DenseArray {
 public:
  DenseArray() = default;
  DenseArray(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseArray(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseArray from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const DenseArray& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const DenseArray& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(const DenseArray& a);

// Stacks two matrices with equal column counts; either side may be empty.
DenseArray append_rows(const DenseArray& top, const DenseArray& bottom);

// Gathers the given rows into a new matrix, in index order.
DenseArray take_rows(const DenseArray& src, const std::vector<std::size_t>& indices);

}  // namespace esp
