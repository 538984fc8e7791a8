#include "lws/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lws/errors.hpp"

namespace fs = std::filesystem;

namespace lws {

namespace {

constexpr std::uint64_t kSubsampleStreamBase = 3000;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be an object");
  ExperimentConfig cfg;
  cfg.train = train_config_from_json(j);
  try {
    cfg.repeats = j.value("repeats", cfg.repeats);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.dataset_seed = j.value("dataset_seed", cfg.train.seed);
    if (j.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : j.at("modes")) {
        cfg.modes.push_back(mode_from_string(m.get<std::string>()));
      }
    }
    if (!j.contains("architecture")) {
      throw ConfigError("experiment config needs 'architecture'");
    }
    cfg.architecture = architecture_from_json(j.at("architecture"));
    if (!j.contains("dataset")) {
      throw ConfigError("experiment config needs 'dataset'");
    }
    const auto& d = j.at("dataset");
    const std::string type = d.value("type", "");
    if (type == "synthetic") {
      cfg.dataset = synthetic_from_json(d);
    } else if (type == "idx") {
      IdxSpec idx;
      idx.train_subsample = d.value("train_subsample", idx.train_subsample);
      if (!d.contains("tasks") || d.at("tasks").empty()) {
        throw ConfigError("idx dataset needs a non-empty 'tasks' list");
      }
      for (const auto& t : d.at("tasks")) {
        IdxTaskSpec spec;
        spec.name = t.value("name", "task_" + std::to_string(idx.tasks.size()));
        spec.train_images = t.at("train_images").get<std::string>();
        spec.train_labels = t.at("train_labels").get<std::string>();
        spec.test_images = t.at("test_images").get<std::string>();
        spec.test_labels = t.at("test_labels").get<std::string>();
        idx.tasks.push_back(std::move(spec));
      }
      cfg.dataset = std::move(idx);
    } else {
      throw ConfigError("dataset 'type' must be synthetic or idx");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  if (cfg.repeats == 0) throw ConfigError("repeats must be positive");
  if (cfg.modes.empty()) throw ConfigError("modes must not be empty");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

std::vector<TaskDataset> build_datasets(const ExperimentConfig& cfg) {
  if (const auto* synth = std::get_if<SyntheticSpec>(&cfg.dataset)) {
    return synthetic_suite(*synth, cfg.dataset_seed);
  }
  const auto& idx = std::get<IdxSpec>(cfg.dataset);
  std::vector<TaskDataset> tasks;
  for (std::size_t t = 0; t < idx.tasks.size(); ++t) {
    const IdxTaskSpec& spec = idx.tasks[t];
    TaskDataset ds;
    ds.name = spec.name;
    auto train = load_idx(spec.train_images, spec.train_labels);
    auto test = load_idx(spec.test_images, spec.test_labels);
    ds.train_x = std::move(train.first);
    ds.train_y = std::move(train.second);
    ds.test_x = std::move(test.first);
    ds.test_y = std::move(test.second);

    int max_label = 0;
    for (int y : ds.train_y) max_label = std::max(max_label, y);
    for (int y : ds.test_y) max_label = std::max(max_label, y);
    ds.classes = static_cast<std::size_t>(max_label) + 1;
    if (ds.classes < 2) {
      throw DataError("task " + ds.name + " has fewer than 2 classes");
    }

    const std::size_t n = ds.train_x.dim(0);
    if (idx.train_subsample > 0 && idx.train_subsample < n) {
      // Uniform subsample without replacement, seeded per task.
      RandomEngine rng =
          make_stream(cfg.dataset_seed, kSubsampleStreamBase + t);
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      for (std::size_t i = 0; i < idx.train_subsample; ++i) {
        const std::size_t j = i + uniform_index(rng, n - i);
        std::swap(perm[i], perm[j]);
      }
      std::vector<std::size_t> keep(perm.begin(),
                                    perm.begin() + idx.train_subsample);
      std::vector<int> labels(keep.size());
      for (std::size_t i = 0; i < keep.size(); ++i) {
        labels[i] = ds.train_y[keep[i]];
      }
      ds.train_x = take_rows(ds.train_x, keep);
      ds.train_y = std::move(labels);
    }
    tasks.push_back(std::move(ds));
  }
  return tasks;
}

namespace {

void check_input_shape(const ExperimentConfig& cfg,
                       const std::vector<TaskDataset>& datasets) {
  const Shape& want = cfg.architecture.input_shape;
  for (const TaskDataset& task : datasets) {
    const Shape& have = task.train_x.shape();
    if (have.size() != want.size() + 1 ||
        !std::equal(want.begin(), want.end(), have.begin() + 1)) {
      throw ConfigError("task " + task.name + " examples have shape " +
                        shape_to_string(have) +
                        " which does not extend the architecture input " +
                        shape_to_string(want));
    }
  }
}

nlohmann::json sharing_to_json(const SharingSummary& s) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& hist : s.layer_histograms) {
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [size, count] : hist) {
      h[std::to_string(size)] = count;
    }
    layers.push_back(std::move(h));
  }
  return layers;
}

}  // namespace

nlohmann::json run_single_training(const ExperimentConfig& cfg,
                                   const std::vector<TaskDataset>& datasets,
                                   Mode mode, std::uint64_t seed,
                                   const std::string& out_dir) {
  check_input_shape(cfg, datasets);
  TrainConfig train_cfg = cfg.train;
  train_cfg.mode = mode;
  train_cfg.seed = seed;

  fs::create_directories(out_dir);
  const ResolvedArchitecture arch = resolve(cfg.architecture);
  std::vector<std::size_t> classes;
  for (const TaskDataset& t : datasets) classes.push_back(t.classes);

  TrainState state = init_state(train_cfg, arch, classes);
  MetricsWriter metrics(out_dir + "/metrics.csv", /*append=*/false);
  train(state, train_cfg, datasets, &metrics, out_dir + "/checkpoint.json");

  const Assignment a = current_assignment(state, train_cfg);
  const EvalResult eval = evaluate(*state.bank, a, datasets);
  const SharingSummary sharing =
      sharing_summary(a, state.bank->tasks(), state.bank->shareable_layers());

  nlohmann::json summary{
      {"mode", mode_to_string(mode)},
      {"seed", seed},
      {"iterations", state.iteration},
      {"mean_test_error", eval.mean_error},
      {"per_task_error", eval.per_task_error},
      {"effective_params", count_effective_parameters(*state.bank, a)},
      {"assignment", a.indices},
      {"sharing", sharing_to_json(sharing)},
      {"tasks", state.bank->tasks()},
      {"shareable_layers", state.bank->shareable_layers()}};
  if (mode == Mode::kLws) {
    summary["pi"] = state.dist.to_json();
    summary["pi_entropy"] = state.dist.entropy();
  }

  std::ofstream out(out_dir + "/run_summary.json");
  if (!out) throw DataError("cannot write " + out_dir + "/run_summary.json");
  out << summary.dump(2) << "\n";
  return summary;
}

nlohmann::json run_experiment(const ExperimentConfig& cfg) {
  const std::vector<TaskDataset> datasets = build_datasets(cfg);
  check_input_shape(cfg, datasets);
  fs::create_directories(cfg.output_dir);

  std::map<std::string, std::vector<double>> errors;
  std::map<std::string, std::vector<double>> effective;
  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json mode_runs = nlohmann::json::object();

  for (Mode mode : cfg.modes) {
    const std::string mode_name = mode_to_string(mode);
    mode_runs[mode_name] = nlohmann::json::array();
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::string dir =
          cfg.output_dir + "/" + mode_name + "/run_" + std::to_string(r);
      try {
        const nlohmann::json run = run_single_training(
            cfg, datasets, mode, cfg.train.seed + r, dir);
        errors[mode_name].push_back(run.at("mean_test_error").get<double>());
        effective[mode_name].push_back(
            run.at("effective_params").get<double>());
        mode_runs[mode_name].push_back(
            {{"run", r},
             {"seed", run.at("seed")},
             {"mean_test_error", run.at("mean_test_error")},
             {"effective_params", run.at("effective_params")}});
      } catch (const Error& e) {
        failures.push_back(
            {{"mode", mode_name}, {"run", r}, {"error", e.what()}});
      }
    }
  }

  bool any_success = false;
  for (const auto& [name, errs] : errors) any_success |= !errs.empty();

  nlohmann::json modes_json = nlohmann::json::object();
  const auto p_against = [&](const std::string& self,
                             const std::string& other) -> nlohmann::json {
    if (self == other) return nullptr;
    auto a = errors.find(self);
    auto b = errors.find(other);
    if (a == errors.end() || b == errors.end() || a->second.empty() ||
        b->second.empty()) {
      return nullptr;
    }
    return mann_whitney_u(a->second, b->second).p_one_sided;
  };

  for (Mode mode : cfg.modes) {
    const std::string name = mode_to_string(mode);
    const auto it = errors.find(name);
    if (it == errors.end() || it->second.empty()) {
      modes_json[name] = {{"mode", name}, {"completed_runs", 0}};
      continue;
    }
    const std::vector<double>& errs = it->second;
    nlohmann::json m{{"mode", name},
                     {"completed_runs", errs.size()},
                     {"mean_test_error", mean_of(errs)},
                     {"std_test_error", sample_std(errs)},
                     {"std_degenerate", errs.size() < 2},
                     {"p_vs_full", p_against(name, "full_sharing")},
                     {"p_vs_none", p_against(name, "no_sharing")},
                     {"effective_params", mean_of(effective[name])},
                     {"errors", errs},
                     {"runs", mode_runs[name]}};
    modes_json[name] = std::move(m);
  }

  nlohmann::json summary{{"repeats", cfg.repeats},
                         {"seed", cfg.train.seed},
                         {"dataset_seed", cfg.dataset_seed},
                         {"modes", modes_json},
                         {"failures", failures}};

  std::ofstream out(cfg.output_dir + "/summary.json");
  if (!out) throw DataError("cannot write " + cfg.output_dir + "/summary.json");
  out << summary.dump(2) << "\n";

  if (!any_success) {
    throw AllRunsFailedError("all " + std::to_string(cfg.repeats) +
                             " runs failed in every mode; see summary.json");
  }
  return summary;
}

namespace {

struct EvalPoint {
  std::uint64_t iteration;
  double error;
};

// Eval rows of one metrics.csv.
std::vector<EvalPoint> read_eval_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ReportError(path + " is empty");
  if (line != MetricsWriter::kHeader) {
    throw ReportError(path + " has unexpected header: " + line);
  }
  std::vector<EvalPoint> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    // A trailing empty field is dropped by getline; pad.
    while (fields.size() < 6) fields.emplace_back();
    if (fields[1] != "eval") continue;
    rows.push_back({std::stoull(fields[0]), std::stod(fields[3])});
  }
  return rows;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace

void emit_reports(const std::string& run_dir) {
  const std::vector<std::string> known_modes = {"lws", "full_sharing",
                                                "no_sharing"};
  std::map<std::string, std::vector<std::string>> run_dirs;
  for (const std::string& mode : known_modes) {
    const fs::path mode_dir = fs::path(run_dir) / mode;
    if (!fs::is_directory(mode_dir)) continue;
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(mode_dir)) {
      if (entry.is_directory() &&
          entry.path().filename().string().rfind("run_", 0) == 0) {
        dirs.push_back(entry.path().string());
      }
    }
    std::sort(dirs.begin(), dirs.end());
    if (!dirs.empty()) run_dirs[mode] = std::move(dirs);
  }
  if (run_dirs.empty()) {
    throw ReportError("no completed runs under " + run_dir);
  }

  // Validate everything before writing anything.
  std::vector<std::string> missing;
  for (const auto& [mode, dirs] : run_dirs) {
    for (const std::string& dir : dirs) {
      for (const char* name : {"/metrics.csv", "/run_summary.json"}) {
        if (!fs::exists(dir + name)) missing.push_back(dir + name);
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing run files:";
    for (const std::string& m : missing) msg += " " + m;
    throw ReportError(msg);
  }

  struct ModeReport {
    std::map<std::uint64_t, std::vector<double>> curve;  // iteration -> errors
    // layer -> group size -> number of tasks covered, across runs
    std::map<std::size_t, std::map<std::size_t, std::size_t>> sharing;
    std::size_t tasks = 0;
    std::size_t runs = 0;
    std::vector<double> final_errors;
  };
  std::map<std::string, ModeReport> reports;

  for (const auto& [mode, dirs] : run_dirs) {
    ModeReport& rep = reports[mode];
    for (const std::string& dir : dirs) {
      for (const EvalPoint& p : read_eval_rows(dir + "/metrics.csv")) {
        rep.curve[p.iteration].push_back(p.error);
      }
      std::ifstream in(dir + "/run_summary.json");
      nlohmann::json run;
      try {
        in >> run;
      } catch (const nlohmann::json::exception& e) {
        throw ReportError(dir + "/run_summary.json: " + e.what());
      }
      rep.tasks = run.at("tasks").get<std::size_t>();
      rep.final_errors.push_back(run.at("mean_test_error").get<double>());
      const auto& sharing = run.at("sharing");
      for (std::size_t layer = 0; layer < sharing.size(); ++layer) {
        for (const auto& [size_str, count] : sharing[layer].items()) {
          const std::size_t size = std::stoull(size_str);
          rep.sharing[layer][size] += size * count.get<std::size_t>();
        }
      }
      rep.runs += 1;
    }
  }

  const fs::path report_dir = fs::path(run_dir) / "reports";
  fs::create_directories(report_dir);

  for (const auto& [mode, rep] : reports) {
    std::ofstream curve(report_dir / ("test_curve_" + mode + ".csv"));
    curve << "iteration,mean_test_accuracy,std_test_accuracy\n";
    for (const auto& [iteration, errs] : rep.curve) {
      std::vector<double> acc;
      acc.reserve(errs.size());
      for (double e : errs) acc.push_back(1.0 - e);
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g",
                    static_cast<std::size_t>(iteration), mean_of(acc),
                    sample_std(acc));
      curve << buf << "\n";
    }

    std::ofstream sharing(report_dir / ("sharing_" + mode + ".csv"));
    sharing << "layer,group_size,percentage\n";
    for (const auto& [layer, hist] : rep.sharing) {
      const double denom = static_cast<double>(rep.runs * rep.tasks);
      for (const auto& [size, covered] : hist) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g", layer, size,
                      100.0 * static_cast<double>(covered) / denom);
        sharing << buf << "\n";
      }
    }
  }

  std::ofstream table(report_dir / "table.txt");
  table << "Method          Test error [%]\n";
  const std::map<std::string, std::string> labels = {
      {"full_sharing", "Full sharing"},
      {"no_sharing", "No sharing"},
      {"lws", "Learned sharing"}};
  for (const std::string& mode : known_modes) {
    auto it = reports.find(mode);
    if (it == reports.end()) continue;
    const std::vector<double>& errs = it->second.final_errors;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%-15s %s +/- %s\n",
                  labels.at(mode).c_str(), format_percent(mean_of(errs)).c_str(),
                  format_percent(sample_std(errs)).c_str());
    table << buf;
  }
}

}  // namespace lws
