#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lws/adam.hpp"
#include "lws/dataset.hpp"
#include "lws/nes.hpp"
#include "lws/weight_bank.hpp"

namespace lws {

enum class Mode { kLws, kFullSharing, kNoSharing };

std::string mode_to_string(Mode mode);
Mode mode_from_string(const std::string& text);

struct TrainConfig {
  std::size_t lambda_theta = 8;  // weight-gradient samples per iteration
  std::size_t lambda_pi = 8;     // search population per iteration
  double eta_theta = 1e-3;
  double eta_pi = 1e-2;
  std::size_t k = 3;          // candidates per shareable layer
  std::size_t batch_size = 16;  // examples per task per batch
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  double floor = 1e-3;  // probability floor applied after each search update
  Mode mode = Mode::kLws;
  std::size_t eval_interval = 100;      // 0 = never evaluate during training
  std::size_t checkpoint_interval = 0;  // 0 = only write the final checkpoint
  AdamConfig adam;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// One batch per task, drawn uniformly with replacement from the train split.
struct Batch {
  std::vector<Tensor> x;
  std::vector<std::vector<int>> y;
};

Batch make_batch(const std::vector<TaskDataset>& tasks, std::size_t batch_size,
                 RandomEngine& rng);

// Unweighted mean over tasks of the per-task cross-entropy under one shared
// assignment. Returns the scalar loss node.
Tape::NodeId multi_task_loss(Tape& tape, const WeightBank& bank,
                             const Assignment& a, const Batch& batch);

// Forward-only loss value; records nothing against the weights.
double score_assignment(const WeightBank& bank, const Assignment& a,
                        const Batch& batch);

// Zeroes all gradients, accumulates one backward pass per assignment on the
// same batch, scales by 1/count. Returns the mean sample loss.
double accumulate_sgd_gradients(const WeightBank& bank,
                                const std::vector<Assignment>& assignments,
                                const Batch& batch);

// Full training state. The four random streams keep the search phase and the
// weight phase independent: a run without the search phase consumes the
// weight streams identically.
struct TrainState {
  std::unique_ptr<WeightBank> bank;
  JointAssignmentDistribution dist;
  Assignment fixed;  // baseline modes only
  AdamState adam;
  std::uint64_t iteration = 0;
  RandomEngine rng_nes_batch;
  RandomEngine rng_nes_assign;
  RandomEngine rng_sgd_batch;
  RandomEngine rng_sgd_assign;
};

TrainState init_state(const TrainConfig& cfg, const ResolvedArchitecture& arch,
                      const std::vector<std::size_t>& task_classes);

// The assignment a run reports and evaluates under: per-slot argmax for the
// learned mode, the fixed assignment for baselines.
Assignment current_assignment(const TrainState& state, const TrainConfig& cfg);

// One search-distribution update (mode must be kLws): scores lambda_pi
// sampled assignments on a fresh batch without touching the weights, then
// applies the shaped Monte Carlo gradient and the probability floor.
void step_nes(TrainState& state, const TrainConfig& cfg,
              const std::vector<TaskDataset>& tasks);

// One weight update: fresh batch, lambda_theta sampled (or fixed)
// assignments, averaged gradients, one Adam step. Returns the mean sample
// loss. Never touches the search distribution.
double step_sgd(TrainState& state, const TrainConfig& cfg,
                const std::vector<TaskDataset>& tasks);

// Append-only CSV stream with a fixed header.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, bool append);
  void train_row(std::uint64_t iteration, double mean_train_loss,
                 double pi_entropy, std::size_t effective_params);
  void eval_row(std::uint64_t iteration, double mean_test_error,
                double pi_entropy, std::size_t effective_params);

  static constexpr const char* kHeader =
      "iteration,phase,mean_train_loss,mean_test_error,pi_entropy,"
      "effective_params";

 private:
  std::ofstream out_;
};

struct EvalResult {
  std::vector<double> per_task_error;
  double mean_error = 0.0;
};

// Top-1 error on the test split of every task under one assignment.
EvalResult evaluate(const WeightBank& bank, const Assignment& a,
                    const std::vector<TaskDataset>& tasks,
                    std::size_t chunk = 512);

// Runs until cfg.iterations, appending metrics rows and periodic
// checkpoints. Resuming from a loaded state continues the exact run: the
// checkpoint round trip is bitwise.
void train(TrainState& state, const TrainConfig& cfg,
           const std::vector<TaskDataset>& tasks, MetricsWriter* metrics,
           const std::string& checkpoint_path = "");

void save_checkpoint(const std::string& path, const TrainState& state,
                     const TrainConfig& cfg,
                     const std::vector<std::size_t>& task_classes);

struct LoadedCheckpoint {
  TrainConfig config;
  ArchitectureSpec architecture;
  std::vector<std::size_t> task_classes;
  TrainState state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lws
