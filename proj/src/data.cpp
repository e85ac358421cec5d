#include "esp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string_view>

#include "esp/errors.hpp"
#include "esp/rng.hpp"

namespace esp {

namespace {

struct LabelledRows {
  DenseArray features;
  std::vector<std::size_t> labels;
};

// Groups a contiguous 0-based class range into task_count consecutive chunks
// and assembles the stream in the requested presentation order.
TaskStream split_by_class(const LabelledRows& train, const LabelledRows& test,
                          std::size_t class_count, std::size_t task_count,
                          const std::vector<std::size_t>& task_order) {
  if (task_count == 0) throw ConfigError("task split: task count must be positive");
  if (class_count % task_count != 0) {
    throw ConfigError("task split: " + std::to_string(class_count) +
                      " classes do not divide into " + std::to_string(task_count) + " tasks");
  }
  std::vector<std::size_t> order(task_count);
  for (std::size_t i = 0; i < task_count; ++i) order[i] = i;
  if (!task_order.empty()) {
    if (task_order.size() != task_count) {
      throw ConfigError("task split: task_order has " + std::to_string(task_order.size()) +
                        " entries for " + std::to_string(task_count) + " tasks");
    }
    std::vector<bool> seen(task_count, false);
    for (std::size_t g : task_order) {
      if (g >= task_count || seen[g]) {
        throw ConfigError("task split: task_order is not a permutation of 0.." +
                          std::to_string(task_count - 1));
      }
      seen[g] = true;
    }
    order = task_order;
  }

  const std::size_t group_size = class_count / task_count;
  auto gather = [&](const LabelledRows& rows, std::size_t group, std::size_t task_id) {
    TaskDataset ds;
    ds.task_id = task_id;
    const std::size_t lo = group * group_size, hi = lo + group_size;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.labels.size(); ++i) {
      if (rows.labels[i] >= lo && rows.labels[i] < hi) idx.push_back(i);
    }
    ds.features = take_rows(rows.features, idx);
    ds.labels.reserve(idx.size());
    for (std::size_t i : idx) ds.labels.push_back(rows.labels[i]);
    for (std::size_t c = lo; c < hi; ++c) ds.class_set.push_back(c);
    return ds;
  };

  TaskStream stream;
  stream.class_count = class_count;
  stream.feature_width = train.features.cols();
  stream.group_order = order;
  for (std::size_t position = 0; position < task_count; ++position) {
    const std::size_t group = order[position];
    Task task;
    task.train = gather(train, group, position);
    task.test = gather(test, group, position);
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

double parse_double(std::string_view token, std::size_t line_no, const std::string& path) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path + ": line " + std::to_string(line_no) + ": bad number '" +
                     std::string(token) + "'");
  }
  return value;
}

LabelledRows read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open " + path);
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> tokens;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      tokens.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (tokens.size() < 2) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": expected a label and at least one feature");
    }
    const double label_value = parse_double(tokens[0], line_no, path);
    if (label_value < 0.0 || label_value != std::floor(label_value)) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": bad label '" +
                       std::string(tokens[0]) + "'");
    }
    const std::size_t row_width = tokens.size() - 1;
    if (width == 0) {
      width = row_width;
    } else if (row_width != width) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": row has " +
                       std::to_string(row_width) + " features, expected " + std::to_string(width));
    }
    labels.push_back(static_cast<std::size_t>(label_value));
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      values.push_back(parse_double(tokens[i], line_no, path));
    }
  }
  if (labels.empty()) throw ParseError("csv: " + path + " has no data rows");
  return {DenseArray(labels.size(), width, std::move(values)), std::move(labels)};
}

std::uint32_t read_be_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

LabelledRows read_idx_pair(const std::string& images_path, const std::string& labels_path) {
  constexpr std::uint32_t kImagesMagic = 0x00000803;
  constexpr std::uint32_t kLabelsMagic = 0x00000801;

  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("idx: cannot open " + images_path);
  const std::uint32_t img_magic = read_be_u32(img);
  if (!img || img_magic != kImagesMagic) {
    throw ParseError("idx: " + images_path + ": bad magic " + std::to_string(img_magic) +
                     ", expected " + std::to_string(kImagesMagic));
  }
  const std::uint32_t count = read_be_u32(img);
  const std::uint32_t rows = read_be_u32(img);
  const std::uint32_t cols = read_be_u32(img);
  if (!img) throw ParseError("idx: " + images_path + ": truncated header");

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("idx: cannot open " + labels_path);
  const std::uint32_t lab_magic = read_be_u32(lab);
  if (!lab || lab_magic != kLabelsMagic) {
    throw ParseError("idx: " + labels_path + ": bad magic " + std::to_string(lab_magic) +
                     ", expected " + std::to_string(kLabelsMagic));
  }
  const std::uint32_t label_count = read_be_u32(lab);
  if (label_count != count) {
    throw ParseError("idx: " + images_path + " has " + std::to_string(count) + " images but " +
                     labels_path + " has " + std::to_string(label_count) + " labels");
  }

  const std::size_t width = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixel_row(width);
  LabelledRows out{DenseArray(count, width), {}};
  out.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(pixel_row.data()), static_cast<std::streamsize>(width));
    if (!img) throw ParseError("idx: " + images_path + ": truncated image data");
    double* dst = out.features.row(i);
    for (std::size_t p = 0; p < width; ++p) dst[p] = pixel_row[p] / 255.0;
    unsigned char label = 0;
    lab.read(reinterpret_cast<char*>(&label), 1);
    if (!lab) throw ParseError("idx: " + labels_path + ": truncated label data");
    out.labels[i] = label;
  }
  return out;
}

// Contiguity of the 0-based label range is validated on train; test labels
// must stay inside it.
std::size_t validate_labels(const LabelledRows& train, const LabelledRows& test,
                            const std::string& source) {
  std::size_t max_label = 0;
  for (std::size_t l : train.labels) max_label = std::max(max_label, l);
  std::vector<bool> present(max_label + 1, false);
  for (std::size_t l : train.labels) present[l] = true;
  for (std::size_t c = 0; c <= max_label; ++c) {
    if (!present[c]) {
      throw ParseError(source + ": class " + std::to_string(c) +
                       " missing; labels must form a contiguous 0-based range");
    }
  }
  for (std::size_t l : test.labels) {
    if (l > max_label) {
      throw ParseError(source + ": unknown label " + std::to_string(l) + " in test split");
    }
  }
  return max_label + 1;
}

void minmax_scale(DenseArray& train, DenseArray& test) {
  const std::size_t width = train.cols();
  for (std::size_t c = 0; c < width; ++c) {
    double lo = train(0, c), hi = train(0, c);
    for (std::size_t r = 0; r < train.rows(); ++r) {
      lo = std::min(lo, train(r, c));
      hi = std::max(hi, train(r, c));
    }
    for (std::size_t r = 0; r < test.rows(); ++r) {
      lo = std::min(lo, test(r, c));
      hi = std::max(hi, test(r, c));
    }
    const double span = hi - lo;
    auto rescale = [lo, span](DenseArray& a, std::size_t col) {
      for (std::size_t r = 0; r < a.rows(); ++r) {
        a(r, col) = span > 0.0 ? (a(r, col) - lo) / span : 0.0;
      }
    };
    rescale(train, c);
    rescale(test, c);
  }
}

}  // namespace

std::vector<std::vector<double>> default_class_means(std::size_t class_count, std::size_t dims,
                                                     double scale) {
  std::vector<std::vector<double>> means(class_count, std::vector<double>(dims, 0.0));
  if (dims >= class_count) {
    for (std::size_t c = 0; c < class_count; ++c) means[c][c] = scale;
  } else {
    if (dims < 2) throw ConfigError("default_class_means: needs at least 2 dims for a circle");
    for (std::size_t c = 0; c < class_count; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                           static_cast<double>(class_count);
      means[c][0] = scale * std::cos(angle);
      means[c][1] = scale * std::sin(angle);
    }
  }
  return means;
}

TaskStream generate_gaussian_stream(const GaussianSpec& spec, std::size_t task_count,
                                    const std::vector<std::size_t>& task_order) {
  if (spec.class_count < 2) throw ConfigError("gaussian: needs at least 2 classes");
  if (spec.stddev <= 0.0) throw ConfigError("gaussian: stddev must be positive");
  if (spec.train_per_class == 0 || spec.test_per_class == 0) {
    throw ConfigError("gaussian: train_per_class and test_per_class must be positive");
  }
  std::vector<std::vector<double>> means =
      spec.means.empty() ? default_class_means(spec.class_count, spec.dims, spec.mean_scale)
                         : spec.means;
  if (means.size() != spec.class_count) {
    throw ConfigError("gaussian: " + std::to_string(means.size()) + " means for " +
                      std::to_string(spec.class_count) + " classes");
  }
  for (const auto& mean : means) {
    if (mean.size() != spec.dims) {
      throw ConfigError("gaussian: mean width does not match dims");
    }
  }
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      if (means[a] == means[b]) {
        throw ConfigError("gaussian: classes " + std::to_string(a) + " and " +
                          std::to_string(b) + " share a mean");
      }
    }
  }

  const std::size_t per_class = spec.train_per_class + spec.test_per_class;
  LabelledRows train{DenseArray(spec.class_count * spec.train_per_class, spec.dims), {}};
  LabelledRows test{DenseArray(spec.class_count * spec.test_per_class, spec.dims), {}};
  train.labels.reserve(train.features.rows());
  test.labels.reserve(test.features.rows());
  std::size_t train_row = 0, test_row = 0;
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    Rng rng = Rng::stream(spec.seed, "gaussian.class." + std::to_string(c));
    // One stream per class, train indices first: an index partition, so the
    // splits are disjoint by construction.
    for (std::size_t i = 0; i < per_class; ++i) {
      const bool is_train = i < spec.train_per_class;
      double* dst = is_train ? train.features.row(train_row) : test.features.row(test_row);
      for (std::size_t d = 0; d < spec.dims; ++d) {
        dst[d] = means[c][d] + rng.normal(0.0, spec.stddev);
      }
      if (is_train) {
        train.labels.push_back(c);
        ++train_row;
      } else {
        test.labels.push_back(c);
        ++test_row;
      }
    }
  }
  return split_by_class(train, test, spec.class_count, task_count, task_order);
}

TaskStream load_csv_stream(const CsvSpec& spec, std::size_t task_count,
                           const std::vector<std::size_t>& task_order) {
  LabelledRows train = read_csv(spec.train_path);
  LabelledRows test = read_csv(spec.test_path);
  if (train.features.cols() != test.features.cols()) {
    throw ParseError("csv: train has " + std::to_string(train.features.cols()) +
                     " features, test has " + std::to_string(test.features.cols()));
  }
  const std::size_t class_count = validate_labels(train, test, spec.train_path);
  minmax_scale(train.features, test.features);
  return split_by_class(train, test, class_count, task_count, task_order);
}

TaskStream load_idx_stream(const IdxSpec& spec, std::size_t task_count,
                           const std::vector<std::size_t>& task_order) {
  LabelledRows train = read_idx_pair(spec.train_images, spec.train_labels);
  LabelledRows test = read_idx_pair(spec.test_images, spec.test_labels);
  if (train.features.cols() != test.features.cols()) {
    throw ParseError("idx: train/test image sizes differ");
  }
  const std::size_t class_count = validate_labels(train, test, spec.train_images);
  return split_by_class(train, test, class_count, task_count, task_order);
}

}  // namespace esp
