#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esp/dataset.hpp"

namespace esp {

// Synthetic class-conditional Gaussians, the desk-scale stand-in dataset.
// Two generations with the same spec are bit-identical.
struct GaussianSpec {
  std::size_t class_count = 10;
  std::size_t dims = 16;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 200;
  double stddev = 0.3;
  double mean_scale = 1.0;
  std::vector<std::vector<double>> means;  // optional; auto-placed when empty
  std::uint64_t seed = 0;
};

// Class means on a scaled one-hot simplex when dims >= class_count, otherwise
// evenly spaced on a circle in the first two dimensions.
std::vector<std::vector<double>> default_class_means(std::size_t class_count, std::size_t dims,
                                                     double scale);

// Splits classes into task_count consecutive disjoint groups; task_order,
// when given, permutes which group is presented at each position.
TaskStream generate_gaussian_stream(const GaussianSpec& spec, std::size_t task_count,
                                    const std::vector<std::size_t>& task_order = {});

// Labelled CSV: UTF-8, comma separated, no header, first column an integer
// class label, remaining columns features. Features are min-max scaled to
// [0, 1] per column.
struct CsvSpec {
  std::string train_path;
  std::string test_path;
};

TaskStream load_csv_stream(const CsvSpec& spec, std::size_t task_count,
                           const std::vector<std::size_t>& task_order = {});

// Standard IDX image/label pairs (big-endian magic + dims header); pixel
// features scaled by 1/255.
struct IdxSpec {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

TaskStream load_idx_stream(const IdxSpec& spec, std::size_t task_count,
                           const std::vector<std::size_t>& task_order = {});

}  // namespace esp
