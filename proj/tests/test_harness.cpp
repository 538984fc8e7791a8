#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "lws/errors.hpp"
#include "lws/experiment.hpp"
#include "lws/stats.hpp"

using namespace lws;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "lws_harness_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

nlohmann::json tiny_experiment_json(const std::string& out_dir) {
  return nlohmann::json{
      {"iterations", 2},
      {"K", 2},
      {"lambda_pi", 2},
      {"lambda_theta", 1},
      {"batch_size", 4},
      {"seed", 3},
      {"eval_interval", 1},
      {"repeats", 2},
      {"output_dir", out_dir},
      {"architecture",
       {{"input", {4}},
        {"layers",
         {{{"type", "dense"}, {"out", 6}}, {{"type", "relu"}}}}}},
      {"dataset",
       {{"type", "synthetic"},
        {"input_dim", 4},
        {"classes", 2},
        {"teacher_hidden", 4},
        {"teacher_groups", {0, 0}},
        {"train_per_task", 8},
        {"test_per_task", 8}}}};
}

}  // namespace

TEST_CASE("idx writer emits the exact byte layout") {
  const fs::path dir = temp_dir("idx_bytes");
  const std::string img_path = (dir / "img.idx").string();
  const std::string lab_path = (dir / "lab.idx").string();

  Tensor images({2, 1, 2, 2}, {0.0, 1.0, 0.5, 0.2, 1.0, 0.0, 0.8, 0.4});
  save_idx_images(img_path, images);
  save_idx_labels(lab_path, {3, 250});

  const auto img = read_bytes(img_path);
  REQUIRE(img.size() == 16 + 8);
  // Big-endian magic 0x00000803, then count=2, rows=2, cols=2.
  const std::vector<unsigned char> header = {0, 0, 8, 3, 0, 0, 0, 2,
                                             0, 0, 0, 2, 0, 0, 0, 2};
  for (std::size_t i = 0; i < header.size(); ++i) CHECK(img[i] == header[i]);
  CHECK(img[16] == 0);
  CHECK(img[17] == 255);
  CHECK(img[18] == 128);  // round(0.5 * 255)
  CHECK(img[19] == 51);

  const auto lab = read_bytes(lab_path);
  REQUIRE(lab.size() == 8 + 2);
  const std::vector<unsigned char> lab_header = {0, 0, 8, 1, 0, 0, 0, 2};
  for (std::size_t i = 0; i < lab_header.size(); ++i) {
    CHECK(lab[i] == lab_header[i]);
  }
  CHECK(lab[8] == 3);
  CHECK(lab[9] == 250);

  CHECK_THROWS_AS(save_idx_labels(lab_path, {256}), ArgumentError);
  CHECK_THROWS_AS(save_idx_images(img_path, Tensor({2, 3})), DimensionError);
}

TEST_CASE("idx round trip restores pixels and labels") {
  const fs::path dir = temp_dir("idx_roundtrip");
  const std::string img_path = (dir / "img.idx").string();
  const std::string lab_path = (dir / "lab.idx").string();

  Tensor images({3, 1, 4, 5});
  for (std::size_t i = 0; i < images.numel(); ++i) {
    images[i] = static_cast<double>((i * 7) % 256) / 255.0;
  }
  std::vector<int> labels = {0, 9, 4};
  save_idx_images(img_path, images);
  save_idx_labels(lab_path, labels);

  auto [x, y] = load_idx(img_path, lab_path);
  CHECK(x.shape() == Shape{3, 1, 4, 5});
  CHECK(y == labels);
  for (std::size_t i = 0; i < images.numel(); ++i) {
    CHECK(x[i] == images[i]);  // multiples of 1/255 survive exactly
  }
}

TEST_CASE("idx loader reports bad magic numbers by value") {
  const fs::path dir = temp_dir("idx_magic");
  const std::string img_path = (dir / "img.idx").string();
  const std::string lab_path = (dir / "lab.idx").string();
  save_idx_images(img_path, Tensor({1, 1, 2, 2}));
  save_idx_labels(lab_path, {0});

  // Overwrite the image magic with the label magic.
  {
    std::fstream f(img_path,
                   std::ios::binary | std::ios::in | std::ios::out);
    const unsigned char bad[4] = {0, 0, 8, 1};
    f.write(reinterpret_cast<const char*>(bad), 4);
  }
  CHECK_THROWS_WITH_AS(load_idx(img_path, lab_path),
                       doctest::Contains("0x00000801"), FormatError);

  save_idx_images(img_path, Tensor({1, 1, 2, 2}));
  {
    std::fstream f(lab_path,
                   std::ios::binary | std::ios::in | std::ios::out);
    const unsigned char bad[4] = {0xde, 0xad, 0xbe, 0xef};
    f.write(reinterpret_cast<const char*>(bad), 4);
  }
  CHECK_THROWS_WITH_AS(load_idx(img_path, lab_path),
                       doctest::Contains("0xdeadbeef"), FormatError);

  CHECK_THROWS_AS(load_idx((dir / "absent.idx").string(), lab_path),
                  DataError);
}

TEST_CASE("idx loader rejects image/label count mismatches") {
  const fs::path dir = temp_dir("idx_mismatch");
  const std::string img_path = (dir / "img.idx").string();
  const std::string lab_path = (dir / "lab.idx").string();
  save_idx_images(img_path, Tensor({2, 1, 2, 2}));
  save_idx_labels(lab_path, {0, 1, 2});
  CHECK_THROWS_AS(load_idx(img_path, lab_path), DataError);
}

TEST_CASE("synthetic suites are deterministic in spec and seed") {
  SyntheticSpec spec;
  spec.input_dim = 5;
  spec.classes = 3;
  spec.teacher_hidden = 6;
  spec.teacher_groups = {0, 1, 0};
  spec.train_per_task = 12;
  spec.test_per_task = 9;

  auto a = synthetic_suite(spec, 77);
  auto b = synthetic_suite(spec, 77);
  REQUIRE(a.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(a[t].train_y == b[t].train_y);
    CHECK(a[t].test_y == b[t].test_y);
    for (std::size_t i = 0; i < a[t].train_x.numel(); ++i) {
      CHECK(a[t].train_x[i] == b[t].train_x[i]);
    }
  }

  auto c = synthetic_suite(spec, 78);
  bool any_difference = false;
  for (std::size_t i = 0; i < a[0].train_x.numel(); ++i) {
    if (a[0].train_x[i] != c[0].train_x[i]) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("noise-free synthetic labels are the teacher argmax") {
  SyntheticSpec spec;
  spec.input_dim = 5;
  spec.classes = 4;
  spec.teacher_hidden = 6;
  spec.teacher_groups = {0, 1, 0};
  spec.train_per_task = 20;
  spec.test_per_task = 10;

  auto tasks = synthetic_suite(spec, 11);
  for (std::size_t t = 0; t < 3; ++t) {
    const Tensor logits = synthetic_teacher_logits(
        spec, 11, spec.teacher_groups[t], tasks[t].train_x);
    for (std::size_t i = 0; i < spec.train_per_task; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < spec.classes; ++c) {
        if (logits[i * spec.classes + c] > logits[i * spec.classes + best]) {
          best = c;
        }
      }
      CHECK(tasks[t].train_y[i] == static_cast<int>(best));
    }
  }

  // Tasks in one group agree with each other's teacher; tasks in different
  // groups disagree somewhere.
  const Tensor cross_group = synthetic_teacher_logits(spec, 11, 1 /* group */,
                                                      tasks[0].train_x);
  bool differs = false;
  for (std::size_t i = 0; i < spec.train_per_task; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < spec.classes; ++c) {
      if (cross_group[i * spec.classes + c] >
          cross_group[i * spec.classes + best]) {
        best = c;
      }
    }
    if (tasks[0].train_y[i] != static_cast<int>(best)) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("label noise resamples roughly its share of labels") {
  SyntheticSpec spec;
  spec.input_dim = 5;
  spec.classes = 4;
  spec.teacher_hidden = 6;
  spec.teacher_groups = {0};
  spec.train_per_task = 4000;
  spec.test_per_task = 10;

  auto clean = synthetic_suite(spec, 21);
  spec.label_noise = 0.3;
  auto noisy = synthetic_suite(spec, 21);

  // A resampled label lands on the clean one 1/classes of the time, so the
  // observed flip rate is noise * (1 - 1/classes).
  std::size_t flips = 0;
  for (std::size_t i = 0; i < spec.train_per_task; ++i) {
    if (clean[0].train_y[i] != noisy[0].train_y[i]) flips += 1;
  }
  const double p = 0.3 * 0.75;
  const double n = static_cast<double>(spec.train_per_task);
  const double sigma = std::sqrt(p * (1 - p) * n);
  CHECK(std::abs(static_cast<double>(flips) - p * n) < 5 * sigma);
}

TEST_CASE("synthetic spec json round trip and validation") {
  SyntheticSpec spec;
  spec.teacher_groups = {0, 0, 1};
  spec.label_noise = 0.1;
  const nlohmann::json j = synthetic_to_json(spec);
  SyntheticSpec back = synthetic_from_json(j);
  CHECK(back.teacher_groups == spec.teacher_groups);
  CHECK(back.label_noise == spec.label_noise);
  CHECK(back.input_dim == spec.input_dim);

  CHECK_THROWS_AS(synthetic_from_json(nlohmann::json{{"classes", 3}}),
                  ConfigError);
  SyntheticSpec bad = spec;
  bad.label_noise = 1.5;
  CHECK_THROWS_AS(synthetic_suite(bad, 1), ConfigError);
  bad = spec;
  bad.classes = 1;
  CHECK_THROWS_AS(synthetic_suite(bad, 1), ConfigError);
}

TEST_CASE("mann-whitney fixtures") {
  // Complete separation, smaller first: U = 0 and the left tail holds one of
  // C(4,2) = 6 equally likely orderings.
  MannWhitneyResult r = mann_whitney_u({1.0, 2.0}, {3.0, 4.0});
  CHECK(r.u == 0.0);
  CHECK(r.p_one_sided == doctest::Approx(1.0 / 6.0));

  // All values tied: midranks make U = n1 n2 / 2 and the p-value is 1.
  MannWhitneyResult tied = mann_whitney_u({5.0, 5.0}, {5.0, 5.0});
  CHECK(tied.u == doctest::Approx(2.0));
  CHECK(tied.p_one_sided == doctest::Approx(1.0));

  // Ten fully separated pairs: exactly one ordering out of C(20,10).
  std::vector<double> lo, hi;
  for (int i = 1; i <= 10; ++i) lo.push_back(i);
  for (int i = 11; i <= 20; ++i) hi.push_back(i);
  MannWhitneyResult ten = mann_whitney_u(lo, hi);
  CHECK(ten.u == 0.0);
  CHECK(ten.p_one_sided == doctest::Approx(1.0 / 184756.0).epsilon(1e-12));

  // The reversed comparison is not significant.
  MannWhitneyResult rev = mann_whitney_u(hi, lo);
  CHECK(rev.p_one_sided == doctest::Approx(1.0));

  CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), ArgumentError);
  CHECK_THROWS_AS(mann_whitney_u({1.0}, {std::nan("")}), ArgumentError);
}

TEST_CASE("mann-whitney complement identity over random pairs") {
  RandomEngine rng = make_stream(55, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n1 = 1 + uniform_index(rng, 12);
    const std::size_t n2 = 1 + uniform_index(rng, 12);
    std::vector<double> a(n1), b(n2);
    // Small integer support forces plenty of ties.
    for (double& v : a) v = static_cast<double>(uniform_index(rng, 6));
    for (double& v : b) v = static_cast<double>(uniform_index(rng, 6));
    const double u_ab = mann_whitney_u(a, b).u;
    const double u_ba = mann_whitney_u(b, a).u;
    CHECK(u_ab + u_ba == doctest::Approx(static_cast<double>(n1 * n2)));
  }
}

TEST_CASE("exact and normal p-values agree on tie-free small samples") {
  RandomEngine rng = make_stream(56, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n1 = 3 + uniform_index(rng, 4);
    const std::size_t n2 = 3 + uniform_index(rng, 4);
    std::vector<double> a(n1), b(n2);
    for (double& v : a) v = uniform01(rng);
    for (double& v : b) v = uniform01(rng);
    const double exact = mann_whitney_exact_p(a, b);
    const double normal = mann_whitney_normal_p(a, b);
    CHECK(std::abs(exact - normal) < 0.05);
  }
}

TEST_CASE("normal approximation handles large and degenerate samples") {
  std::vector<double> a(30), b(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a[i] = static_cast<double>(i);
    b[i] = static_cast<double>(i) + 25.0;
  }
  CHECK(mann_whitney_u(a, b).p_one_sided < 1e-4);
  CHECK(mann_whitney_u(b, a).p_one_sided > 0.999);

  // Every value identical: zero variance collapses to p = 0.5.
  std::vector<double> flat_a(30, 1.0), flat_b(30, 1.0);
  CHECK(mann_whitney_u(flat_a, flat_b).p_one_sided ==
        doctest::Approx(0.5));
}

TEST_CASE("experiment config parsing and validation") {
  const fs::path dir = temp_dir("config");
  nlohmann::json j = tiny_experiment_json((dir / "out").string());
  ExperimentConfig cfg = parse_experiment_config(j);
  CHECK(cfg.repeats == 2);
  CHECK(cfg.train.iterations == 2);
  CHECK(cfg.train.k == 2);
  CHECK(cfg.modes.size() == 3);
  CHECK(cfg.dataset_seed == cfg.train.seed);
  CHECK(std::holds_alternative<SyntheticSpec>(cfg.dataset));

  j["modes"] = {"lws", "none"};
  cfg = parse_experiment_config(j);
  REQUIRE(cfg.modes.size() == 2);
  CHECK(cfg.modes[1] == Mode::kNoSharing);

  nlohmann::json bad = j;
  bad.erase("architecture");
  CHECK_THROWS_AS(parse_experiment_config(bad), ConfigError);
  bad = j;
  bad.erase("dataset");
  CHECK_THROWS_AS(parse_experiment_config(bad), ConfigError);
  bad = j;
  bad["dataset"]["type"] = "csv";
  CHECK_THROWS_AS(parse_experiment_config(bad), ConfigError);
  bad = j;
  bad["repeats"] = 0;
  CHECK_THROWS_AS(parse_experiment_config(bad), ConfigError);
  bad = j;
  bad["dataset"] = {{"type", "idx"}, {"tasks", nlohmann::json::array()}};
  CHECK_THROWS_AS(parse_experiment_config(bad), ConfigError);

  const std::string cfg_path = (dir / "cfg.json").string();
  {
    std::ofstream out(cfg_path);
    out << j.dump();
  }
  ExperimentConfig from_file = load_experiment_config(cfg_path);
  CHECK(from_file.repeats == cfg.repeats);
  CHECK_THROWS_AS(load_experiment_config((dir / "absent.json").string()),
                  ConfigError);
  {
    std::ofstream out(cfg_path);
    out << "{ nope";
  }
  CHECK_THROWS_AS(load_experiment_config(cfg_path), ConfigError);
}

TEST_CASE("build_datasets loads idx tasks with inferred classes and subsample") {
  const fs::path dir = temp_dir("build_idx");
  RandomEngine rng = make_stream(1, 0);
  Tensor train_x({6, 1, 2, 2});
  for (std::size_t i = 0; i < train_x.numel(); ++i) {
    train_x[i] = static_cast<double>((i * 11) % 256) / 255.0;
  }
  std::vector<int> train_y = {0, 2, 1, 2, 0, 1};
  Tensor test_x({4, 1, 2, 2});
  for (std::size_t i = 0; i < test_x.numel(); ++i) {
    test_x[i] = static_cast<double>((i * 5) % 256) / 255.0;
  }
  std::vector<int> test_y = {1, 0, 2, 1};

  save_idx_images((dir / "train_x.idx").string(), train_x);
  save_idx_labels((dir / "train_y.idx").string(), train_y);
  save_idx_images((dir / "test_x.idx").string(), test_x);
  save_idx_labels((dir / "test_y.idx").string(), test_y);

  ExperimentConfig cfg;
  cfg.train.seed = 5;
  cfg.dataset_seed = 5;
  IdxSpec idx;
  IdxTaskSpec task;
  task.name = "digits";
  task.train_images = (dir / "train_x.idx").string();
  task.train_labels = (dir / "train_y.idx").string();
  task.test_images = (dir / "test_x.idx").string();
  task.test_labels = (dir / "test_y.idx").string();
  idx.tasks = {task};
  cfg.dataset = idx;

  auto full = build_datasets(cfg);
  REQUIRE(full.size() == 1);
  CHECK(full[0].name == "digits");
  CHECK(full[0].classes == 3);
  CHECK(full[0].train_x.dim(0) == 6);
  CHECK(full[0].test_x.dim(0) == 4);

  std::get<IdxSpec>(cfg.dataset).train_subsample = 3;
  auto sub = build_datasets(cfg);
  CHECK(sub[0].train_x.dim(0) == 3);
  REQUIRE(sub[0].train_y.size() == 3);

  // Each subsampled row is a distinct source row with its own label.
  const std::size_t stride = 4;
  std::vector<bool> seen(6, false);
  for (std::size_t i = 0; i < 3; ++i) {
    bool matched = false;
    for (std::size_t r = 0; r < 6 && !matched; ++r) {
      bool equal = true;
      for (std::size_t c = 0; c < stride; ++c) {
        if (sub[0].train_x[i * stride + c] != full[0].train_x[r * stride + c]) {
          equal = false;
          break;
        }
      }
      if (equal && sub[0].train_y[i] == full[0].train_y[r] && !seen[r]) {
        seen[r] = true;
        matched = true;
      }
    }
    CHECK(matched);
  }

  // Same dataset seed, same subsample.
  auto again = build_datasets(cfg);
  CHECK(again[0].train_y == sub[0].train_y);
}

TEST_CASE("run_experiment writes per-run outputs and a summary") {
  const fs::path dir = temp_dir("experiment");
  ExperimentConfig cfg =
      parse_experiment_config(tiny_experiment_json((dir / "out").string()));

  const nlohmann::json summary = run_experiment(cfg);
  CHECK(summary.at("failures").empty());
  REQUIRE(summary.at("modes").size() == 3);

  for (const std::string mode : {"lws", "full_sharing", "no_sharing"}) {
    const auto& m = summary.at("modes").at(mode);
    CHECK(m.at("completed_runs").get<std::size_t>() == 2);
    CHECK(std::isfinite(m.at("mean_test_error").get<double>()));
    CHECK(m.at("std_test_error").get<double>() >= 0.0);
    CHECK_FALSE(m.at("std_degenerate").get<bool>());
    for (int r = 0; r < 2; ++r) {
      const fs::path run_dir =
          dir / "out" / mode / ("run_" + std::to_string(r));
      CHECK(fs::exists(run_dir / "metrics.csv"));
      CHECK(fs::exists(run_dir / "checkpoint.json"));
      CHECK(fs::exists(run_dir / "run_summary.json"));
    }
  }
  CHECK(fs::exists(dir / "out" / "summary.json"));

  // Self-comparisons are null; cross-mode p-values land in (0, 1].
  CHECK(summary.at("modes").at("full_sharing").at("p_vs_full").is_null());
  CHECK(summary.at("modes").at("no_sharing").at("p_vs_none").is_null());
  const double p =
      summary.at("modes").at("lws").at("p_vs_full").get<double>();
  CHECK(p > 0.0);
  CHECK(p <= 1.0);

  // The learned mode stores its distribution in the run summary.
  std::ifstream in(dir / "out" / "lws" / "run_0" / "run_summary.json");
  nlohmann::json run;
  in >> run;
  CHECK(run.contains("pi"));
  CHECK(run.at("mode") == "lws");
  CHECK(run.at("seed").get<std::uint64_t>() == 3);

  // Identical config, fresh directory: identical aggregate numbers.
  ExperimentConfig cfg2 =
      parse_experiment_config(tiny_experiment_json((dir / "out2").string()));
  const nlohmann::json summary2 = run_experiment(cfg2);
  CHECK(summary2.at("modes") == summary.at("modes"));
}

TEST_CASE("run_experiment flags degenerate spread and records failures") {
  const fs::path dir = temp_dir("experiment_edge");
  nlohmann::json j = tiny_experiment_json((dir / "out").string());
  j["repeats"] = 1;
  j["K"] = 1;  // no_sharing needs K >= 2 tasks, so those runs fail
  j["modes"] = {"full_sharing", "no_sharing"};
  ExperimentConfig cfg = parse_experiment_config(j);

  const nlohmann::json summary = run_experiment(cfg);
  CHECK(summary.at("modes").at("full_sharing").at("std_degenerate").get<bool>());
  CHECK(summary.at("modes").at("full_sharing").at("std_test_error").get<double>() ==
        0.0);
  CHECK(summary.at("modes").at("no_sharing").at("completed_runs").get<std::size_t>() ==
        0);
  CHECK(summary.at("failures").size() == 1);
  CHECK(summary.at("failures")[0].at("mode") == "no_sharing");

  // Nothing succeeds at all: the experiment itself fails.
  j["modes"] = {"no_sharing"};
  j["output_dir"] = (dir / "out_fail").string();
  CHECK_THROWS_AS(run_experiment(parse_experiment_config(j)),
                  AllRunsFailedError);
  CHECK(fs::exists(dir / "out_fail" / "summary.json"));
}

TEST_CASE("emit_reports aggregates curves, sharing, and the summary table") {
  const fs::path dir = temp_dir("reports");
  ExperimentConfig cfg =
      parse_experiment_config(tiny_experiment_json((dir / "out").string()));
  run_experiment(cfg);

  const std::string run_dir = (dir / "out").string();
  emit_reports(run_dir);

  for (const std::string mode : {"lws", "full_sharing", "no_sharing"}) {
    const fs::path curve = dir / "out" / "reports" / ("test_curve_" + mode + ".csv");
    REQUIRE(fs::exists(curve));
    std::ifstream in(curve);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iteration,mean_test_accuracy,std_test_accuracy");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) rows += 1;
    }
    CHECK(rows == 2);  // eval_interval 1, iterations 2

    const fs::path sharing = dir / "out" / "reports" / ("sharing_" + mode + ".csv");
    REQUIRE(fs::exists(sharing));
    std::ifstream sin(sharing);
    REQUIRE(std::getline(sin, line));
    CHECK(line == "layer,group_size,percentage");
    double total = 0.0;
    std::size_t sharing_rows = 0;
    while (std::getline(sin, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string layer, size, pct;
      std::getline(ss, layer, ',');
      std::getline(ss, size, ',');
      std::getline(ss, pct, ',');
      CHECK(layer == "0");  // single shareable layer
      total += std::stod(pct);
      sharing_rows += 1;
      if (mode == "full_sharing") {
        CHECK(size == "2");  // every task in one group of size T
        CHECK(std::stod(pct) == doctest::Approx(100.0));
      }
      if (mode == "no_sharing") {
        CHECK(size == "1");
      }
    }
    CHECK(total == doctest::Approx(100.0));
    CHECK(sharing_rows >= 1);
  }

  const fs::path table = dir / "out" / "reports" / "table.txt";
  REQUIRE(fs::exists(table));
  std::ifstream tin(table);
  std::string content((std::istreambuf_iterator<char>(tin)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("Full sharing") != std::string::npos);
  CHECK(content.find("No sharing") != std::string::npos);
  CHECK(content.find("Learned sharing") != std::string::npos);
  CHECK(content.find("+/-") != std::string::npos);
}

TEST_CASE("emit_reports validates before writing") {
  const fs::path empty = temp_dir("reports_empty");
  CHECK_THROWS_AS(emit_reports(empty.string()), ReportError);
  CHECK_FALSE(fs::exists(empty / "reports"));

  // A run directory with a missing piece is reported by path and nothing is
  // written.
  const fs::path dir = temp_dir("reports_missing");
  nlohmann::json j = tiny_experiment_json((dir / "out").string());
  j["repeats"] = 1;
  j["modes"] = {"full_sharing"};
  run_experiment(parse_experiment_config(j));
  fs::remove(dir / "out" / "full_sharing" / "run_0" / "run_summary.json");
  CHECK_THROWS_WITH_AS(emit_reports((dir / "out").string()),
                       doctest::Contains("run_summary.json"), ReportError);
  CHECK_FALSE(fs::exists(dir / "out" / "reports"));
}
