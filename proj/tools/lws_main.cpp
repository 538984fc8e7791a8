#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "lws/errors.hpp"
#include "lws/experiment.hpp"

namespace {

int run_train(const std::string& config_path, const std::string& mode_text,
              std::int64_t seed_override, const std::string& out_override) {
  lws::ExperimentConfig cfg = lws::load_experiment_config(config_path);
  lws::Mode mode = cfg.modes.empty() ? lws::Mode::kLws : cfg.modes.front();
  if (!mode_text.empty()) mode = lws::mode_from_string(mode_text);
  std::uint64_t seed = cfg.train.seed;
  if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
  std::string out_dir = cfg.output_dir + "/" + lws::mode_to_string(mode) +
                        "/seed_" + std::to_string(seed);
  if (!out_override.empty()) out_dir = out_override;

  const auto datasets = lws::build_datasets(cfg);
  const auto summary =
      lws::run_single_training(cfg, datasets, mode, seed, out_dir);
  std::printf("mode=%s seed=%llu mean_test_error=%.6f effective_params=%llu\n",
              summary.at("mode").get<std::string>().c_str(),
              static_cast<unsigned long long>(seed),
              summary.at("mean_test_error").get<double>(),
              summary.at("effective_params").get<unsigned long long>());
  std::printf("outputs written to %s\n", out_dir.c_str());
  return 0;
}

int run_evaluate(const std::string& config_path,
                 const std::string& checkpoint_path) {
  lws::ExperimentConfig cfg = lws::load_experiment_config(config_path);
  const auto datasets = lws::build_datasets(cfg);
  lws::LoadedCheckpoint loaded = lws::load_checkpoint(checkpoint_path);
  if (loaded.task_classes.size() != datasets.size()) {
    throw lws::ConfigError(
        "checkpoint was trained on " +
        std::to_string(loaded.task_classes.size()) + " tasks but the config " +
        "defines " + std::to_string(datasets.size()));
  }
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    if (loaded.task_classes[t] != datasets[t].classes) {
      throw lws::ConfigError("task " + datasets[t].name + " has " +
                             std::to_string(datasets[t].classes) +
                             " classes but the checkpoint expects " +
                             std::to_string(loaded.task_classes[t]));
    }
  }

  const lws::Assignment a =
      lws::current_assignment(loaded.state, loaded.config);
  const lws::EvalResult eval = lws::evaluate(*loaded.state.bank, a, datasets);
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    std::printf("task %s: test_error=%.6f\n", datasets[t].name.c_str(),
                eval.per_task_error[t]);
  }
  std::printf("mean_test_error=%.6f\n", eval.mean_error);
  return 0;
}

int run_compare(const std::string& config_path,
                const std::string& out_override) {
  lws::ExperimentConfig cfg = lws::load_experiment_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const auto summary = lws::run_experiment(cfg);
  for (const auto& [name, entry] : summary.at("modes").items()) {
    if (entry.value("completed_runs", std::size_t{0}) == 0) {
      std::printf("%-14s no completed runs\n", name.c_str());
      continue;
    }
    std::printf("%-14s mean_test_error=%.6f std=%.6f runs=%zu\n", name.c_str(),
                entry.at("mean_test_error").get<double>(),
                entry.at("std_test_error").get<double>(),
                entry.at("completed_runs").get<std::size_t>());
  }
  std::printf("summary written to %s/summary.json\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Multi-task training with a learned layer-sharing assignment"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string mode_text;
  std::string out_dir;
  std::int64_t seed = -1;

  CLI::App* train = app.add_subcommand(
      "train", "Run one training run for a single mode");
  train->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  train->add_option("--mode", mode_text,
                    "lws | full_sharing | no_sharing (default: first mode "
                    "in the config)");
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", out_dir, "Override the output directory");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Evaluate a checkpoint on the config's test splits");
  evaluate->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")
      ->required();

  CLI::App* compare = app.add_subcommand(
      "compare", "Run every configured mode with repeats and compare");
  compare->add_option("--config", config_path, "Experiment config JSON")
      ->required();
  compare->add_option("--out", out_dir, "Override the output directory");

  CLI::App* report = app.add_subcommand(
      "report", "Aggregate report files from a compare output directory");
  report->add_option("--out", out_dir, "Directory written by compare")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad invocation reports as a config error
  }

  try {
    if (train->parsed()) return run_train(config_path, mode_text, seed, out_dir);
    if (evaluate->parsed()) return run_evaluate(config_path, checkpoint_path);
    if (compare->parsed()) return run_compare(config_path, out_dir);
    if (report->parsed()) {
      lws::emit_reports(out_dir);
      std::printf("reports written to %s/reports\n", out_dir.c_str());
      return 0;
    }
  } catch (const lws::AllRunsFailedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const lws::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const lws::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
