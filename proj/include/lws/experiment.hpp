#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lws/architecture.hpp"
#include "lws/dataset.hpp"
#include "lws/stats.hpp"
#include "lws/trainer.hpp"

namespace lws {

struct IdxTaskSpec {
  std::string name;
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

struct IdxSpec {
  std::vector<IdxTaskSpec> tasks;
  // 0 keeps the full train split; otherwise a uniform subsample without
  // replacement, drawn from the dataset seed.
  std::size_t train_subsample = 0;
};

// Full declarative description of an experiment: training hyperparameters,
// trunk architecture, data source, repeat count, and output location.
struct ExperimentConfig {
  TrainConfig train;
  ArchitectureSpec architecture;
  std::variant<SyntheticSpec, IdxSpec> dataset;
  std::size_t repeats = 10;
  std::string output_dir = "out";
  std::vector<Mode> modes = {Mode::kLws, Mode::kFullSharing, Mode::kNoSharing};
  std::uint64_t dataset_seed = 0;  // defaults to train.seed
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Materialises the task suite; identical across repeats and modes.
std::vector<TaskDataset> build_datasets(const ExperimentConfig& cfg);

// One training run into out_dir: metrics.csv, checkpoint.json,
// run_summary.json. Returns the run summary.
nlohmann::json run_single_training(const ExperimentConfig& cfg,
                                   const std::vector<TaskDataset>& datasets,
                                   Mode mode, std::uint64_t seed,
                                   const std::string& out_dir);

// repeats runs per requested mode with seeds seed+0 .. seed+R-1. Failures
// are recorded and skipped; throws AllRunsFailedError only if nothing
// succeeded. Writes <output_dir>/summary.json and returns it.
nlohmann::json run_experiment(const ExperimentConfig& cfg);

// Aggregated report files under <run_dir>/reports: a test-accuracy curve CSV
// and a sharing-group-size CSV per mode, plus a plain-text summary table.
void emit_reports(const std::string& run_dir);

}  // namespace lws
