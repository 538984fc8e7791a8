#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lws/rng.hpp"
#include "lws/tensor.hpp"

namespace lws {

// Supervised classification task. x tensors carry the batch dimension first:
// images (n, 1, h, w), flat features (n, d). Labels are 0-based.
struct TaskDataset {
  std::string name;
  Tensor train_x;
  std::vector<int> train_y;
  Tensor test_x;
  std::vector<int> test_y;
  std::size_t classes = 0;
};

// Rows of x (dim 0) selected by index, in order.
Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& rows);

// Reads an images/labels file pair. Images: magic 0x00000803, dims
// (count, rows, cols), pixels scaled to [0,1] as byte/255, returned as
// (count, 1, rows, cols). Labels: magic 0x00000801, one byte each. The two
// counts must agree.
std::pair<Tensor, std::vector<int>> load_idx(const std::string& images_path,
                                             const std::string& labels_path);

// Writers for fixtures; pixel values are rounded to the nearest byte.
void save_idx_images(const std::string& path, const Tensor& images);
void save_idx_labels(const std::string& path, const std::vector<int>& labels);

// Fixed random teacher networks label uniform random inputs. Tasks in one
// group share a teacher, so their example distributions are identical; tasks
// in different groups are unrelated.
struct SyntheticSpec {
  std::size_t input_dim = 16;
  std::size_t classes = 4;
  std::size_t teacher_hidden = 16;
  std::vector<std::size_t> teacher_groups;  // group id per task
  std::size_t train_per_task = 96;
  std::size_t test_per_task = 1000;
  double label_noise = 0.0;  // chance a label is resampled uniformly
};

std::vector<TaskDataset> synthetic_suite(const SyntheticSpec& spec,
                                         std::uint64_t seed);

// Teacher logits for one group, rebuilt from (spec, seed); for checking that
// noise-free labels match the teacher's own argmax.
Tensor synthetic_teacher_logits(const SyntheticSpec& spec, std::uint64_t seed,
                                std::size_t group, const Tensor& x);

nlohmann::json synthetic_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_from_json(const nlohmann::json& j);

}  // namespace lws
