#include "esp/array.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "esp/errors.hpp"

namespace esp {

ShapeError shape_mismatch(const char* op, std::size_t rows_a, std::size_t cols_a,
                          std::size_t rows_b, std::size_t cols_b) {
  return ShapeError(std::string(op) + ": shapes " + std::to_string(rows_a) + "x" +
                    std::to_string(cols_a) + " and " + std::to_string(rows_b) + "x" +
                    std::to_string(cols_b) + " do not conform");
}

DenseArray::DenseArray(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("DenseArray: " + std::to_string(data_.size()) + " values for shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseArray DenseArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  DenseArray out(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != out.cols_) {
      throw ShapeError("DenseArray::from_rows: ragged row " + std::to_string(r));
    }
    std::size_t c = 0;
    for (double v : row) out(r, c++) = v;
    ++r;
  }
  return out;
}

bool all_finite(const DenseArray& a) {
  for (double v : a.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseArray append_rows(const DenseArray& top, const DenseArray& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) {
    throw shape_mismatch("append_rows", top.rows(), top.cols(), bottom.rows(), bottom.cols());
  }
  DenseArray out(top.rows() + bottom.rows(), top.cols());
  std::memcpy(out.data(), top.data(), top.size() * sizeof(double));
  std::memcpy(out.data() + top.size(), bottom.data(), bottom.size() * sizeof(double));
  return out;
}

DenseArray take_rows(const DenseArray& src, const std::vector<std::size_t>& indices) {
  DenseArray out(indices.size(), src.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::memcpy(out.row(i), src.row(indices[i]), src.cols() * sizeof(double));
  }
  return out;
}

}  // namespace esp
