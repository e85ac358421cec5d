#pragma once

#include <cstddef>
#include <vector>

#include "esp/array.hpp"

namespace esp {

// One task's labelled rows. Labels are global class indices into the single
// shared decoder head; class sets of distinct tasks in a stream never
// overlap.
struct TaskDataset {
  std::size_t task_id = 0;
  DenseArray features;              // N x d
  std::vector<std::size_t> labels;  // N global class indices
  std::vector<std::size_t> class_set;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

struct Task {
  TaskDataset train;
  TaskDataset test;
};

// Ordered task sequence. Position in `tasks` is the presentation order; no
// task identity ever reaches the model.
struct TaskStream {
  std::vector<Task> tasks;
  std::size_t class_count = 0;
  std::size_t feature_width = 0;
  std::vector<std::size_t> group_order;  // which class group each position shows
};

}  // namespace esp
