#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace esp {

// Dimension mismatch between arrays; the message names both shapes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment or module configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the offending location.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ShapeError shape_mismatch(const char* op, std::size_t rows_a, std::size_t cols_a,
                          std::size_t rows_b, std::size_t cols_b);

}  // namespace esp
