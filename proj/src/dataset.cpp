#include "lws/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lws/errors.hpp"

namespace lws {

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  if (x.rank() < 1) throw DimensionError("take_rows: tensor has no rows");
  const std::size_t n = x.dim(0);
  const std::size_t stride = x.numel() / (n == 0 ? 1 : n);
  Shape out_shape = x.shape();
  out_shape[0] = rows.size();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) {
      throw ArgumentError("take_rows: row " + std::to_string(rows[i]) +
                          " out of range for " + std::to_string(n));
    }
    const double* src = x.data() + rows[i] * stride;
    double* dst = out.data() + i * stride;
    for (std::size_t j = 0; j < stride; ++j) dst[j] = src[j];
  }
  return out;
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated idx header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex_magic(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

std::pair<Tensor, std::vector<int>> load_idx(const std::string& images_path,
                                             const std::string& labels_path) {
  std::ifstream img = open_binary(images_path);
  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != kImagesMagic) {
    throw FormatError("idx image file " + images_path + ": expected magic " +
                      hex_magic(kImagesMagic) + ", got " + hex_magic(img_magic));
  }
  const std::uint32_t count = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);
  const std::size_t pixels =
      static_cast<std::size_t>(count) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  img.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(pixels));
  if (!img) {
    throw FormatError("idx image file " + images_path + ": expected " +
                      std::to_string(pixels) + " pixel bytes");
  }

  std::ifstream lab = open_binary(labels_path);
  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != kLabelsMagic) {
    throw FormatError("idx label file " + labels_path + ": expected magic " +
                      hex_magic(kLabelsMagic) + ", got " + hex_magic(lab_magic));
  }
  const std::uint32_t lab_count = read_be32(lab, labels_path);
  if (lab_count != count) {
    throw DataError("image/label count mismatch: " + std::to_string(count) +
                    " images in " + images_path + " vs " +
                    std::to_string(lab_count) + " labels in " + labels_path);
  }
  std::vector<unsigned char> lab_raw(lab_count);
  lab.read(reinterpret_cast<char*>(lab_raw.data()),
           static_cast<std::streamsize>(lab_count));
  if (!lab) {
    throw FormatError("idx label file " + labels_path + ": expected " +
                      std::to_string(lab_count) + " label bytes");
  }

  Tensor x({count, 1, rows, cols});
  for (std::size_t i = 0; i < pixels; ++i) {
    x[i] = static_cast<double>(raw[i]) / 255.0;
  }
  std::vector<int> y(lab_raw.begin(), lab_raw.end());
  return {std::move(x), std::move(y)};
}

void save_idx_images(const std::string& path, const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 1) {
    throw DimensionError("save_idx_images: expected (n, 1, h, w), got " +
                         shape_to_string(images.shape()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
  for (std::size_t i = 0; i < images.numel(); ++i) {
    double v = std::lround(images[i] * 255.0);
    v = std::min(255.0, std::max(0.0, v));
    const unsigned char b = static_cast<unsigned char>(v);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) throw DataError("failed writing " + path);
}

void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > 255) {
      throw ArgumentError("save_idx_labels: label " + std::to_string(v) +
                          " outside byte range");
    }
    const unsigned char b = static_cast<unsigned char>(v);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) throw DataError("failed writing " + path);
}

namespace {

struct Teacher {
  Tensor w1, b1, w2, b2;
};

// Stream ids: one block for teachers, one per task for inputs and noise.
constexpr std::uint64_t kTeacherStreamBase = 1000;
constexpr std::uint64_t kTaskStreamBase = 2000;

Teacher make_teacher(const SyntheticSpec& spec, std::uint64_t seed,
                     std::size_t group) {
  RandomEngine rng = make_stream(seed, kTeacherStreamBase + group);
  Teacher t;
  t.w1 = he_uniform_init({spec.input_dim, spec.teacher_hidden}, spec.input_dim,
                         rng);
  t.b1 = he_uniform_init({spec.teacher_hidden}, spec.input_dim, rng);
  t.w2 = he_uniform_init({spec.teacher_hidden, spec.classes},
                         spec.teacher_hidden, rng);
  t.b2 = he_uniform_init({spec.classes}, spec.teacher_hidden, rng);
  return t;
}

Tensor teacher_logits(const Teacher& t, const Tensor& x) {
  return ops::add_rowwise(
      ops::matmul(ops::relu(ops::add_rowwise(ops::matmul(x, t.w1), t.b1)),
                  t.w2),
      t.b2);
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = logits.data() + i * c;
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

void validate_synthetic(const SyntheticSpec& spec) {
  if (spec.teacher_groups.empty()) {
    throw ConfigError("synthetic spec needs at least 1 task");
  }
  if (spec.input_dim == 0 || spec.classes < 2 || spec.teacher_hidden == 0) {
    throw ConfigError("synthetic spec sizes must be positive (>= 2 classes)");
  }
  if (spec.train_per_task == 0 || spec.test_per_task == 0) {
    throw ConfigError("synthetic spec needs positive example counts");
  }
  if (spec.label_noise < 0.0 || spec.label_noise > 1.0) {
    throw ConfigError("synthetic label noise must lie in [0, 1]");
  }
}

}  // namespace

std::vector<TaskDataset> synthetic_suite(const SyntheticSpec& spec,
                                         std::uint64_t seed) {
  validate_synthetic(spec);
  std::vector<TaskDataset> tasks;
  tasks.reserve(spec.teacher_groups.size());
  for (std::size_t t = 0; t < spec.teacher_groups.size(); ++t) {
    const Teacher teacher = make_teacher(spec, seed, spec.teacher_groups[t]);
    RandomEngine rng = make_stream(seed, kTaskStreamBase + t);

    auto draw_split = [&](std::size_t n) {
      Tensor x({n, spec.input_dim});
      for (std::size_t i = 0; i < x.numel(); ++i) {
        x[i] = uniform_range(rng, -1.0, 1.0);
      }
      std::vector<int> y = argmax_rows(teacher_logits(teacher, x));
      if (spec.label_noise > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          if (uniform01(rng) < spec.label_noise) {
            y[i] = static_cast<int>(uniform_index(rng, spec.classes));
          }
        }
      }
      return std::pair<Tensor, std::vector<int>>(std::move(x), std::move(y));
    };

    TaskDataset ds;
    ds.name = "task_" + std::to_string(t);
    ds.classes = spec.classes;
    auto train = draw_split(spec.train_per_task);
    ds.train_x = std::move(train.first);
    ds.train_y = std::move(train.second);
    auto test = draw_split(spec.test_per_task);
    ds.test_x = std::move(test.first);
    ds.test_y = std::move(test.second);
    tasks.push_back(std::move(ds));
  }
  return tasks;
}

Tensor synthetic_teacher_logits(const SyntheticSpec& spec, std::uint64_t seed,
                                std::size_t group, const Tensor& x) {
  validate_synthetic(spec);
  return teacher_logits(make_teacher(spec, seed, group), x);
}

nlohmann::json synthetic_to_json(const SyntheticSpec& spec) {
  return nlohmann::json{{"type", "synthetic"},
                        {"input_dim", spec.input_dim},
                        {"classes", spec.classes},
                        {"teacher_hidden", spec.teacher_hidden},
                        {"teacher_groups", spec.teacher_groups},
                        {"train_per_task", spec.train_per_task},
                        {"test_per_task", spec.test_per_task},
                        {"label_noise", spec.label_noise}};
}

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.input_dim = j.value("input_dim", spec.input_dim);
  spec.classes = j.value("classes", spec.classes);
  spec.teacher_hidden = j.value("teacher_hidden", spec.teacher_hidden);
  if (!j.contains("teacher_groups")) {
    throw ConfigError("synthetic dataset json needs 'teacher_groups'");
  }
  spec.teacher_groups = j.at("teacher_groups").get<std::vector<std::size_t>>();
  spec.train_per_task = j.value("train_per_task", spec.train_per_task);
  spec.test_per_task = j.value("test_per_task", spec.test_per_task);
  spec.label_noise = j.value("label_noise", spec.label_noise);
  validate_synthetic(spec);
  return spec;
}

}  // namespace lws
