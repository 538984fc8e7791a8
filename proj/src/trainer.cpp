#include "lws/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lws/errors.hpp"

namespace lws {

std::string mode_to_string(Mode mode) {
  switch (mode) {
    case Mode::kLws:
      return "lws";
    case Mode::kFullSharing:
      return "full_sharing";
    case Mode::kNoSharing:
      return "no_sharing";
  }
  throw ArgumentError("unknown mode");
}

Mode mode_from_string(const std::string& text) {
  if (text == "lws") return Mode::kLws;
  if (text == "full_sharing" || text == "full") return Mode::kFullSharing;
  if (text == "no_sharing" || text == "none") return Mode::kNoSharing;
  throw ConfigError("unknown mode '" + text +
                    "', expected lws | full_sharing | no_sharing");
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return nlohmann::json{{"lambda_theta", cfg.lambda_theta},
                        {"lambda_pi", cfg.lambda_pi},
                        {"eta_theta", cfg.eta_theta},
                        {"eta_pi", cfg.eta_pi},
                        {"K", cfg.k},
                        {"batch_size", cfg.batch_size},
                        {"iterations", cfg.iterations},
                        {"seed", cfg.seed},
                        {"floor", cfg.floor},
                        {"mode", mode_to_string(cfg.mode)},
                        {"eval_interval", cfg.eval_interval},
                        {"checkpoint_interval", cfg.checkpoint_interval},
                        {"adam",
                         {{"beta1", cfg.adam.beta1},
                          {"beta2", cfg.adam.beta2},
                          {"epsilon", cfg.adam.epsilon}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    cfg.lambda_theta = j.value("lambda_theta", cfg.lambda_theta);
    cfg.lambda_pi = j.value("lambda_pi", cfg.lambda_pi);
    cfg.eta_theta = j.value("eta_theta", cfg.eta_theta);
    cfg.eta_pi = j.value("eta_pi", cfg.eta_pi);
    cfg.k = j.value("K", cfg.k);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.floor = j.value("floor", cfg.floor);
    if (j.contains("mode")) {
      cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    }
    cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
    cfg.checkpoint_interval =
        j.value("checkpoint_interval", cfg.checkpoint_interval);
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      cfg.adam.beta1 = a.value("beta1", cfg.adam.beta1);
      cfg.adam.beta2 = a.value("beta2", cfg.adam.beta2);
      cfg.adam.epsilon = a.value("epsilon", cfg.adam.epsilon);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
  return cfg;
}

Batch make_batch(const std::vector<TaskDataset>& tasks, std::size_t batch_size,
                 RandomEngine& rng) {
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  Batch batch;
  batch.x.reserve(tasks.size());
  batch.y.reserve(tasks.size());
  for (const TaskDataset& task : tasks) {
    const std::size_t n = task.train_x.rank() > 0 ? task.train_x.dim(0) : 0;
    if (n == 0 || task.train_y.size() != n) {
      throw DataError("task " + task.name + " has no usable train split");
    }
    std::vector<std::size_t> rows(batch_size);
    std::vector<int> labels(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      rows[i] = uniform_index(rng, n);
      labels[i] = task.train_y[rows[i]];
    }
    batch.x.push_back(take_rows(task.train_x, rows));
    batch.y.push_back(std::move(labels));
  }
  return batch;
}

Tape::NodeId multi_task_loss(Tape& tape, const WeightBank& bank,
                             const Assignment& a, const Batch& batch) {
  if (batch.x.size() != bank.tasks() || batch.y.size() != bank.tasks()) {
    throw DimensionError("batch covers " + std::to_string(batch.x.size()) +
                         " tasks, bank has " + std::to_string(bank.tasks()));
  }
  Tape::NodeId total = 0;
  for (std::size_t t = 0; t < bank.tasks(); ++t) {
    const Tape::NodeId logits = bank.forward_task(tape, t, a, batch.x[t]);
    const Tape::NodeId loss =
        tape.softmax_cross_entropy_mean(logits, batch.y[t]);
    total = t == 0 ? loss : tape.add(total, loss);
  }
  return tape.scale(total, 1.0 / static_cast<double>(bank.tasks()));
}

double score_assignment(const WeightBank& bank, const Assignment& a,
                        const Batch& batch) {
  Tape tape;
  return tape.value(multi_task_loss(tape, bank, a, batch)).item();
}

double accumulate_sgd_gradients(const WeightBank& bank,
                                const std::vector<Assignment>& assignments,
                                const Batch& batch) {
  if (assignments.empty()) {
    throw ArgumentError("accumulate_sgd_gradients: no assignments");
  }
  const std::vector<Parameter*> params = bank.all_parameters();
  zero_gradients(params);
  double loss_sum = 0.0;
  for (const Assignment& a : assignments) {
    Tape tape;
    const Tape::NodeId loss = multi_task_loss(tape, bank, a, batch);
    loss_sum += tape.value(loss).item();
    tape.backward(loss);
  }
  const double inv = 1.0 / static_cast<double>(assignments.size());
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= inv;
  }
  return loss_sum * inv;
}

TrainState init_state(const TrainConfig& cfg, const ResolvedArchitecture& arch,
                      const std::vector<std::size_t>& task_classes) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.lambda_theta == 0) throw ConfigError("lambda_theta must be positive");
  if (cfg.mode == Mode::kLws) {
    if (cfg.lambda_pi < 2) {
      throw ConfigError("lambda_pi must be at least 2 for learned sharing");
    }
    if (!(cfg.floor >= 0.0) ||
        cfg.floor * static_cast<double>(cfg.k) >= 1.0) {
      throw ConfigError("floor must lie in [0, 1/K)");
    }
  }

  TrainState state;
  RandomEngine init_rng = make_stream(cfg.seed, 0);
  state.bank =
      std::make_unique<WeightBank>(arch, cfg.k, task_classes, init_rng);
  state.dist = state.bank->uniform_distribution();
  if (cfg.mode != Mode::kLws) {
    state.fixed = fixed_assignment(cfg.mode == Mode::kFullSharing
                                       ? FixedMode::kFullSharing
                                       : FixedMode::kNoSharing,
                                   state.bank->tasks(),
                                   state.bank->shareable_layers(), cfg.k);
  }
  state.adam = AdamState(state.bank->all_parameters(), cfg.adam);
  state.iteration = 0;
  state.rng_nes_batch = make_stream(cfg.seed, 1);
  state.rng_nes_assign = make_stream(cfg.seed, 2);
  state.rng_sgd_batch = make_stream(cfg.seed, 3);
  state.rng_sgd_assign = make_stream(cfg.seed, 4);
  return state;
}

Assignment current_assignment(const TrainState& state, const TrainConfig& cfg) {
  return cfg.mode == Mode::kLws ? state.dist.argmax_assignment() : state.fixed;
}

void step_nes(TrainState& state, const TrainConfig& cfg,
              const std::vector<TaskDataset>& tasks) {
  if (cfg.mode != Mode::kLws) {
    throw ConfigError("step_nes requires mode lws");
  }
  const Batch batch = make_batch(tasks, cfg.batch_size, state.rng_nes_batch);
  std::vector<ScoredSample> samples;
  samples.reserve(cfg.lambda_pi);
  for (std::size_t i = 0; i < cfg.lambda_pi; ++i) {
    ScoredSample s;
    s.assignment = state.dist.sample(state.rng_nes_assign);
    s.loss = score_assignment(*state.bank, s.assignment, batch);
    s.log_derivative = state.dist.natural_log_derivative(s.assignment);
    samples.push_back(std::move(s));
  }
  const std::vector<double> grad =
      estimate_search_gradient(samples, state.dist.parameter_size());
  nes_step(state.dist, grad, {cfg.lambda_pi, cfg.eta_pi, cfg.floor});
}

double step_sgd(TrainState& state, const TrainConfig& cfg,
                const std::vector<TaskDataset>& tasks) {
  const Batch batch = make_batch(tasks, cfg.batch_size, state.rng_sgd_batch);
  std::vector<Assignment> assignments;
  assignments.reserve(cfg.lambda_theta);
  for (std::size_t i = 0; i < cfg.lambda_theta; ++i) {
    assignments.push_back(cfg.mode == Mode::kLws
                              ? state.dist.sample(state.rng_sgd_assign)
                              : state.fixed);
  }
  const double mean_loss =
      accumulate_sgd_gradients(*state.bank, assignments, batch);
  state.adam.step(state.bank->all_parameters(), cfg.eta_theta);
  return mean_loss;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::string& path, bool append) {
  const bool fresh = [&] {
    if (!append) return true;
    std::ifstream probe(path);
    return !probe.good();
  }();
  out_.open(path, append ? std::ios::app : std::ios::out);
  if (!out_) throw DataError("cannot open metrics file " + path);
  if (fresh) out_ << kHeader << "\n";
}

void MetricsWriter::train_row(std::uint64_t iteration, double mean_train_loss,
                              double pi_entropy,
                              std::size_t effective_params) {
  out_ << iteration << ",train," << format_double(mean_train_loss) << ",,"
       << format_double(pi_entropy) << "," << effective_params << "\n";
}

void MetricsWriter::eval_row(std::uint64_t iteration, double mean_test_error,
                             double pi_entropy, std::size_t effective_params) {
  out_ << iteration << ",eval,," << format_double(mean_test_error) << ","
       << format_double(pi_entropy) << "," << effective_params << "\n";
  out_.flush();
}

EvalResult evaluate(const WeightBank& bank, const Assignment& a,
                    const std::vector<TaskDataset>& tasks, std::size_t chunk) {
  if (tasks.size() != bank.tasks()) {
    throw DimensionError("evaluate: " + std::to_string(tasks.size()) +
                         " tasks for a bank with " +
                         std::to_string(bank.tasks()));
  }
  if (chunk == 0) throw ArgumentError("evaluate: chunk must be positive");
  EvalResult result;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const TaskDataset& task = tasks[t];
    const std::size_t n = task.test_x.rank() > 0 ? task.test_x.dim(0) : 0;
    if (n == 0 || task.test_y.size() != n) {
      throw DataError("task " + task.name + " has no usable test split");
    }
    std::size_t wrong = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
      const std::size_t stop = std::min(n, start + chunk);
      std::vector<std::size_t> rows(stop - start);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = start + i;
      const Tensor x = take_rows(task.test_x, rows);
      Tape tape;
      const Tensor& logits = tape.value(bank.forward_task(tape, t, a, x));
      const std::size_t cols = logits.dim(1);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* r = logits.data() + i * cols;
        std::size_t best = 0;
        for (std::size_t j = 1; j < cols; ++j) {
          if (r[j] > r[best]) best = j;
        }
        if (static_cast<int>(best) != task.test_y[start + i]) ++wrong;
      }
    }
    result.per_task_error.push_back(static_cast<double>(wrong) /
                                    static_cast<double>(n));
  }
  double sum = 0.0;
  for (double e : result.per_task_error) sum += e;
  result.mean_error = sum / static_cast<double>(result.per_task_error.size());
  return result;
}

void train(TrainState& state, const TrainConfig& cfg,
           const std::vector<TaskDataset>& tasks, MetricsWriter* metrics,
           const std::string& checkpoint_path) {
  std::vector<std::size_t> classes;
  classes.reserve(tasks.size());
  for (const TaskDataset& t : tasks) classes.push_back(t.classes);

  while (state.iteration < cfg.iterations) {
    if (cfg.mode == Mode::kLws) step_nes(state, cfg, tasks);
    const double mean_loss = step_sgd(state, cfg, tasks);
    state.iteration += 1;

    const double entropy = cfg.mode == Mode::kLws ? state.dist.entropy() : 0.0;
    const Assignment a = current_assignment(state, cfg);
    const std::size_t effective = count_effective_parameters(*state.bank, a);
    if (metrics) {
      metrics->train_row(state.iteration, mean_loss, entropy, effective);
      if (cfg.eval_interval > 0 && state.iteration % cfg.eval_interval == 0) {
        const EvalResult eval = evaluate(*state.bank, a, tasks);
        metrics->eval_row(state.iteration, eval.mean_error, entropy, effective);
      }
    }
    if (!checkpoint_path.empty() && cfg.checkpoint_interval > 0 &&
        state.iteration % cfg.checkpoint_interval == 0) {
      save_checkpoint(checkpoint_path, state, cfg, classes);
    }
  }
  if (!checkpoint_path.empty()) {
    save_checkpoint(checkpoint_path, state, cfg, classes);
  }
}

namespace {

constexpr const char* kCheckpointFormat = "lws-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_to_json(const Tensor& t) {
  return nlohmann::json{{"shape", t.shape()}, {"data", t.vec()}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  return Tensor(j.at("shape").get<Shape>(),
                j.at("data").get<std::vector<double>>());
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state,
                     const TrainConfig& cfg,
                     const std::vector<std::size_t>& task_classes) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = train_config_to_json(cfg);
  j["architecture"] = architecture_to_json(state.bank->architecture().spec);
  j["task_classes"] = task_classes;
  j["iteration"] = state.iteration;
  j["pi"] = state.dist.to_json();

  nlohmann::json params = nlohmann::json::array();
  for (const Parameter* p : state.bank->all_parameters()) {
    params.push_back(
        {{"id", p->id}, {"shape", p->value.shape()}, {"data", p->value.vec()}});
  }
  j["parameters"] = std::move(params);

  nlohmann::json m = nlohmann::json::object();
  nlohmann::json v = nlohmann::json::object();
  for (const Parameter* p : state.bank->all_parameters()) {
    m[std::to_string(p->id)] = tensor_to_json(state.adam.first_moment(p->id));
    v[std::to_string(p->id)] = tensor_to_json(state.adam.second_moment(p->id));
  }
  j["adam"] = {{"t", state.adam.step_count()},
               {"beta1", state.adam.config().beta1},
               {"beta2", state.adam.config().beta2},
               {"epsilon", state.adam.config().epsilon},
               {"m", std::move(m)},
               {"v", std::move(v)}};

  j["rng"] = {{"nes_batch", serialize_engine(state.rng_nes_batch)},
              {"nes_assign", serialize_engine(state.rng_nes_assign)},
              {"sgd_batch", serialize_engine(state.rng_sgd_batch)},
              {"sgd_assign", serialize_engine(state.rng_sgd_assign)}};

  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint file " + path);
  out << j.dump();
  out.flush();
  if (!out) throw DataError("failed writing checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }

  try {
    if (j.value("format", "") != kCheckpointFormat) {
      throw FormatError("checkpoint " + path + ": unknown format field");
    }
    LoadedCheckpoint loaded;
    loaded.config = train_config_from_json(j.at("config"));
    loaded.architecture = architecture_from_json(j.at("architecture"));
    loaded.task_classes = j.at("task_classes").get<std::vector<std::size_t>>();

    const ResolvedArchitecture arch = resolve(loaded.architecture);
    loaded.state = init_state(loaded.config, arch, loaded.task_classes);
    TrainState& state = loaded.state;
    state.iteration = j.at("iteration").get<std::uint64_t>();
    state.dist = JointAssignmentDistribution::from_json(j.at("pi"));

    const auto& params = j.at("parameters");
    const std::vector<Parameter*> live = state.bank->all_parameters();
    if (params.size() != live.size()) {
      throw FormatError("checkpoint " + path + ": has " +
                        std::to_string(params.size()) + " parameters, bank has " +
                        std::to_string(live.size()));
    }
    for (const auto& pj : params) {
      Parameter* p = state.bank->parameter_by_id(pj.at("id").get<std::uint64_t>());
      Tensor value = tensor_from_json(pj);
      if (!value.same_shape(p->value)) {
        throw FormatError("checkpoint " + path + ": parameter " +
                          std::to_string(p->id) + " shape mismatch");
      }
      p->value = std::move(value);
      p->zero_grad();
    }

    const auto& adam = j.at("adam");
    AdamConfig acfg;
    acfg.beta1 = adam.at("beta1").get<double>();
    acfg.beta2 = adam.at("beta2").get<double>();
    acfg.epsilon = adam.at("epsilon").get<double>();
    std::unordered_map<std::uint64_t, Tensor> m, v;
    for (const auto& [key, value] : adam.at("m").items()) {
      m.emplace(std::stoull(key), tensor_from_json(value));
    }
    for (const auto& [key, value] : adam.at("v").items()) {
      v.emplace(std::stoull(key), tensor_from_json(value));
    }
    state.adam.restore(adam.at("t").get<std::uint64_t>(), acfg, std::move(m),
                       std::move(v));

    const auto& rng = j.at("rng");
    state.rng_nes_batch =
        deserialize_engine(rng.at("nes_batch").get<std::string>());
    state.rng_nes_assign =
        deserialize_engine(rng.at("nes_assign").get<std::string>());
    state.rng_sgd_batch =
        deserialize_engine(rng.at("sgd_batch").get<std::string>());
    state.rng_sgd_assign =
        deserialize_engine(rng.at("sgd_assign").get<std::string>());
    return loaded;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace lws
