#include "hycast/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "hycast/checkpoint.hpp"
#include "hycast/error.hpp"
#include "hycast/metrics.hpp"
#include "hycast/ops.hpp"
#include "hycast/tape.hpp"

namespace hycast {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration ---------------------------------------------------------------

void HarnessConfig::resolve() {
  if (input_channels.empty()) {
    throw ConfigError("config: data.input_channels must name at least one "
                      "channel");
  }
  model.input_channels = input_channels.size();
  model.validate();
  train.validate(model.tasks.size());
}

void to_json(json& j, const HarnessConfig& c) {
  j = json{{"model", c.model},
           {"train", c.train},
           {"data", json{{"input_channels", c.input_channels},
                         {"split", json{{"train_frac", c.split.train_frac},
                                        {"val_frac", c.split.val_frac}}}}}};
}

void from_json(const json& j, HarnessConfig& c) {
  if (j.contains("model")) j.at("model").get_to(c.model);
  if (j.contains("train")) j.at("train").get_to(c.train);
  if (j.contains("data")) {
    const json& d = j.at("data");
    c.input_channels = d.value("input_channels", c.input_channels);
    if (d.contains("split")) {
      const json& s = d.at("split");
      c.split.train_frac = s.value("train_frac", c.split.train_frac);
      c.split.val_frac = s.value("val_frac", c.split.val_frac);
    }
  }
}

HarnessConfig load_harness_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path, "data/file-not-found");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  try {
    return j.get<HarnessConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad config value: " + e.what());
  }
}

// ---- hashing ----------------------------------------------------------------------

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path, "data/file-not-found");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a_hex(buffer.str());
}

// ---- shared plumbing ---------------------------------------------------------------

namespace {

constexpr const char* kArtifactVersion = "0.1.0";
using NormalizerRanges = std::map<std::string, std::pair<double, double>>;

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string full_precision(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

// Written up front as "incomplete" and finalized on success, so a crashed
// run leaves a manifest that says so.
class RunManifest {
 public:
  RunManifest(const fs::path& dir, std::string command, json config,
              std::uint64_t seed, const std::vector<std::string>& inputs)
      : path_(dir / "manifest.json"),
        started_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["config"] = std::move(config);
    doc_["seed"] = seed;
    json hashes = json::object();
    for (const auto& input : inputs) hashes[input] = hash_file(input);
    doc_["input_hashes"] = hashes;
    doc_["artifact_version"] = kArtifactVersion;
    doc_["status"] = "incomplete";
    doc_["outputs"] = json::array();
    doc_["timings"] = json::object();
    write_text(path_, json_text(doc_));
  }

  void complete(const std::vector<std::string>& outputs) {
    doc_["status"] = "complete";
    doc_["outputs"] = outputs;
    doc_["timings"]["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started_)
            .count();
    write_text(path_, json_text(doc_));
  }

 private:
  fs::path path_;
  json doc_;
  std::chrono::steady_clock::time_point started_;
};

json metrics_json(const TaskMetrics& m) {
  return json{{"task", m.task},         {"mae", m.mae},
              {"rmse", m.rmse},         {"mape", m.mape},
              {"mape_excluded", m.mape_excluded},
              {"r2", m.r2},             {"n", m.n}};
}

json eval_json(const EvalResult& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) tasks.push_back(metrics_json(t));
  return json{{"tasks", tasks}, {"mean_r2", r.mean_r2}};
}

// Method-comparison table: Methods, MAE, RMSE, MAPE, R², one table per
// task, numbers to three decimals (full precision lives in the JSON).
void print_metric_table(
    std::ostream& out, const std::string& task,
    const std::vector<std::pair<std::string, const TaskMetrics*>>& rows) {
  out << "task: " << task << "\n";
  out << std::left << std::setw(22) << "Methods" << std::right << std::setw(14)
      << "MAE" << std::setw(14) << "RMSE" << std::setw(10) << "MAPE"
      << std::setw(10) << "R²"
      << "\n";
  for (const auto& [method, metrics] : rows) {
    out << std::left << std::setw(22) << method << std::right << std::setw(14)
        << fixed3(metrics->mae) << std::setw(14) << fixed3(metrics->rmse)
        << std::setw(10) << fixed3(metrics->mape) << std::setw(10)
        << fixed3(metrics->r2) << "\n";
  }
}

std::string method_label(Variant variant) {
  return variant == Variant::kFull ? "Proposed method" : variant_name(variant);
}

// Plot-ready actual-vs-predicted rows for one dataset, original units.
std::string predictions_csv(const OhlcvSeries& series,
                            const WindowedDataset& data, const Normalizer& norm,
                            const std::vector<std::string>& tasks,
                            const std::vector<std::vector<double>>& preds) {
  std::ostringstream out;
  out << "timestep,date";
  for (const auto& t : tasks) out << "," << t << "_actual," << t << "_predicted";
  out << "\n";
  for (std::size_t i = 0; i < data.count(); ++i) {
    std::size_t row = data.target_rows[i];
    out << row << "," << series.timestamps[row];
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      double actual = norm.inverse(tasks[t], data.targets[t].values()[i]);
      double predicted = norm.inverse(tasks[t], preds[t][i]);
      out << "," << full_precision(actual) << "," << full_precision(predicted);
    }
    out << "\n";
  }
  return out.str();
}

// The train/ablate work unit: windows, fresh model, fit, test metrics.
struct TrainedRun {
  WindowBundle bundle;
  std::unique_ptr<HybridModel> model;
  TrainLog log;
  EvalResult val_eval;
  EvalResult test_eval;
};

TrainedRun train_once(const HarnessConfig& cfg, const OhlcvSeries& series) {
  TrainedRun run;
  run.bundle = make_windows(series, cfg.model.window, cfg.input_channels,
                            cfg.model.tasks, cfg.split);
  run.model = std::make_unique<HybridModel>(cfg.model);
  run.log = fit(*run.model, run.bundle.train, run.bundle.val, cfg.train);
  run.val_eval = evaluate_dataset(*run.model, run.bundle.val,
                                  run.bundle.normalizer, cfg.model.tasks);
  run.test_eval = evaluate_dataset(*run.model, run.bundle.test,
                                   run.bundle.normalizer, cfg.model.tasks);
  return run;
}

// Checkpoints written by `train` carry the scaler and the harness config so
// evaluate/predict/bench can reproduce the training-time pipeline exactly.
struct HarnessCheckpoint {
  LoadedCheckpoint loaded;
  HarnessConfig cfg;
  Normalizer normalizer;
};

HarnessCheckpoint load_harness_checkpoint(const std::string& path) {
  HarnessCheckpoint out{load_checkpoint(path), {}, {}};
  const json& extra = out.loaded.extra;
  if (!extra.contains("harness") || !extra.contains("normalizer")) {
    throw ContractError(path + ": checkpoint carries no harness state "
                        "(normalizer and data layout); write it with the "
                        "train command");
  }
  out.cfg = extra.at("harness").get<HarnessConfig>();
  out.normalizer.set_ranges(extra.at("normalizer").get<NormalizerRanges>());
  return out;
}

// ---- commands -----------------------------------------------------------------------

struct TrainOptions {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
};

int cmd_train(const HarnessConfig& cfg, const TrainOptions& opt,
              std::ostream& out) {
  OhlcvSeries series = load_csv(opt.data_path);
  fs::create_directories(opt.out_dir);
  std::vector<std::string> inputs = {opt.data_path};
  if (!opt.config_path.empty()) inputs.push_back(opt.config_path);
  RunManifest manifest(opt.out_dir, "train", cfg, cfg.model.seed, inputs);

  TrainedRun run = train_once(cfg, series);

  json extra{{"harness", cfg}, {"normalizer", run.bundle.normalizer.ranges()}};
  fs::path dir(opt.out_dir);
  save_checkpoint((dir / "model.ckpt").string(), *run.model, extra);
  write_text(dir / "train_log.json", json_text(run.log));
  write_text(dir / "metrics.json",
             json_text(json{{"val", eval_json(run.val_eval)},
                            {"test", eval_json(run.test_eval)}}));
  std::vector<std::vector<double>> preds = predict_all(*run.model, run.bundle.test);
  write_text(dir / "predictions.csv",
             predictions_csv(series, run.bundle.test, run.bundle.normalizer,
                             cfg.model.tasks, preds));

  out << "trained " << variant_name(cfg.model.variant) << " for "
      << run.log.epochs.size() << " epochs (best epoch " << run.log.best_epoch
      << ", best val loss " << full_precision(run.log.best_val_loss) << ")\n";
  out << "test split:\n";
  for (const auto& m : run.test_eval.tasks) {
    print_metric_table(out, m.task, {{method_label(cfg.model.variant), &m}});
  }
  manifest.complete(
      {"model.ckpt", "train_log.json", "metrics.json", "predictions.csv"});
  return kExitSuccess;
}

struct EvaluateOptions {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_dir;
  std::string split = "test";
};

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out) {
  HarnessCheckpoint ckpt = load_harness_checkpoint(opt.checkpoint_path);
  OhlcvSeries series = load_csv(opt.data_path);
  fs::create_directories(opt.out_dir);
  RunManifest manifest(opt.out_dir, "evaluate", ckpt.cfg, ckpt.cfg.model.seed,
                       {opt.checkpoint_path, opt.data_path});

  const std::size_t window = ckpt.cfg.model.window;
  if (series.size() <= window) {
    throw DataError(opt.data_path + ": need more than " +
                    std::to_string(window) + " rows to form a window");
  }
  // Same arithmetic as the training split, against the stored fractions.
  const std::size_t n = series.size() - window;
  const std::size_t n_train =
      static_cast<std::size_t>(ckpt.cfg.split.train_frac * static_cast<double>(n));
  const std::size_t n_val =
      static_cast<std::size_t>(ckpt.cfg.split.val_frac * static_cast<double>(n));
  std::size_t first = 0;
  std::size_t count = 0;
  if (opt.split == "train") {
    first = 0;
    count = n_train;
  } else if (opt.split == "val") {
    first = n_train;
    count = n_val;
  } else if (opt.split == "test") {
    first = n_train + n_val;
    count = n - n_train - n_val;
  } else {
    throw ConfigError("evaluate: split must be train, val, or test; got \"" +
                      opt.split + "\"");
  }
  if (count == 0) {
    throw ContractError("evaluate: the " + opt.split +
                        " split of this series has no windows");
  }

  WindowedDataset data =
      build_windows(series, ckpt.normalizer, window, ckpt.cfg.input_channels,
                    ckpt.cfg.model.tasks, first, count);
  EvalResult eval = evaluate_dataset(*ckpt.loaded.model, data, ckpt.normalizer,
                                     ckpt.cfg.model.tasks);

  fs::path dir(opt.out_dir);
  write_text(dir / "metrics.json",
             json_text(json{{"split", opt.split}, {"metrics", eval_json(eval)}}));
  std::vector<std::vector<double>> preds = predict_all(*ckpt.loaded.model, data);
  write_text(dir / "predictions.csv",
             predictions_csv(series, data, ckpt.normalizer,
                             ckpt.cfg.model.tasks, preds));

  out << opt.split << " split (" << count << " windows):\n";
  for (const auto& m : eval.tasks) {
    print_metric_table(out, m.task,
                       {{method_label(ckpt.cfg.model.variant), &m}});
  }
  manifest.complete({"metrics.json", "predictions.csv"});
  return kExitSuccess;
}

struct AblateOptions {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::vector<std::string> variants;
};

int cmd_ablate(const HarnessConfig& base, const AblateOptions& opt,
               std::ostream& out) {
  if (opt.variants.size() < 2) {
    throw ConfigError("ablate: need at least two variants to compare");
  }
  OhlcvSeries series = load_csv(opt.data_path);
  fs::create_directories(opt.out_dir);
  std::vector<std::string> inputs = {opt.data_path};
  if (!opt.config_path.empty()) inputs.push_back(opt.config_path);
  json config_doc = base;
  config_doc["variants"] = opt.variants;
  RunManifest manifest(opt.out_dir, "ablate", config_doc, base.model.seed,
                       inputs);

  fs::path dir(opt.out_dir);
  json rows = json::array();
  std::vector<std::pair<std::string, EvalResult>> results;
  auto write_table = [&](bool partial, const std::string& failed,
                         const std::string& error) {
    json doc{{"rows", rows}, {"partial", partial}};
    if (partial) {
      doc["failed_variant"] = failed;
      doc["error"] = error;
    }
    write_text(dir / "ablation.json", json_text(doc));

    std::ostringstream csv;
    csv << "task,Methods,MAE,RMSE,MAPE,R²\n";
    for (const auto& [method, eval] : results) {
      for (const auto& m : eval.tasks) {
        csv << m.task << "," << method << "," << full_precision(m.mae) << ","
            << full_precision(m.rmse) << "," << full_precision(m.mape) << ","
            << full_precision(m.r2) << "\n";
      }
    }
    write_text(dir / "ablation.csv", csv.str());
  };

  for (const std::string& name : opt.variants) {
    try {
      HarnessConfig cfg = base;
      cfg.model.variant = parse_variant(name);
      cfg.resolve();  // variant-dependent checks (e.g. spline widths)
      TrainedRun run = train_once(cfg, series);

      json row{{"variant", variant_name(cfg.model.variant)},
               {"method", method_label(cfg.model.variant)},
               {"test", eval_json(run.test_eval)},
               {"best_epoch", run.log.best_epoch},
               {"best_val_loss", run.log.best_val_loss}};
      rows.push_back(row);
      results.emplace_back(method_label(cfg.model.variant), run.test_eval);
    } catch (const Error& e) {
      // Keep what finished, mark the run as partial, and surface the error.
      write_table(true, name, e.what());
      throw;
    }
  }
  write_table(false, "", "");

  // One table per task, rows in the order the variants were given.
  const std::size_t task_count = base.model.tasks.size();
  for (std::size_t t = 0; t < task_count; ++t) {
    std::vector<std::pair<std::string, const TaskMetrics*>> table;
    for (const auto& [method, eval] : results) {
      table.emplace_back(method, &eval.tasks[t]);
    }
    print_metric_table(out, base.model.tasks[t], table);
  }
  manifest.complete({"ablation.json", "ablation.csv"});
  return kExitSuccess;
}

struct PredictOptions {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_dir;
  std::size_t horizon = 1;
};

int cmd_predict(const PredictOptions& opt, std::ostream& out) {
  if (opt.horizon == 0) {
    throw ContractError("predict: horizon must be at least 1");
  }
  HarnessCheckpoint ckpt = load_harness_checkpoint(opt.checkpoint_path);
  OhlcvSeries series = load_csv(opt.data_path);
  fs::create_directories(opt.out_dir);
  RunManifest manifest(opt.out_dir, "predict", ckpt.cfg, ckpt.cfg.model.seed,
                       {opt.checkpoint_path, opt.data_path});

  const auto& channels = ckpt.cfg.input_channels;
  const auto& tasks = ckpt.cfg.model.tasks;
  const std::size_t window = ckpt.cfg.model.window;
  if (series.size() < window) {
    throw DataError(opt.data_path + ": need at least " +
                    std::to_string(window) + " rows, got " +
                    std::to_string(series.size()));
  }

  // Rolling beyond one step feeds predictions back into the window, which
  // only works when every input channel is itself a predicted task.
  std::vector<std::size_t> feedback(channels.size(), 0);
  if (opt.horizon > 1) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      auto task = std::find(tasks.begin(), tasks.end(), channels[c]);
      if (task == tasks.end()) {
        throw ContractError(
            "predict: a horizon past 1 feeds predictions back, so every "
            "input channel must be a predicted task; channel \"" +
            channels[c] + "\" is not");
      }
      feedback[c] = static_cast<std::size_t>(task - tasks.begin());
    }
  }

  // Normalized trailing window, oldest step first.
  std::vector<double> window_values(window * channels.size());
  for (std::size_t t = 0; t < window; ++t) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      double raw = series.channel(channels[c])[series.size() - window + t];
      window_values[t * channels.size() + c] =
          ckpt.normalizer.transform(channels[c], raw);
    }
  }

  NoGradGuard guard;
  std::ostringstream csv;
  csv << "step";
  for (const auto& t : tasks) csv << "," << t << "_predicted";
  csv << "\n";
  std::vector<std::vector<double>> steps;
  for (std::size_t step = 0; step < opt.horizon; ++step) {
    Tensor x({1, window, channels.size()}, window_values);
    std::vector<Tensor> preds = ckpt.loaded.model->forward(x, Mode::kInfer);
    std::vector<double> normalized(tasks.size());
    std::vector<double> denormalized(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      normalized[t] = preds[t].values()[0];
      denormalized[t] = ckpt.normalizer.inverse(tasks[t], normalized[t]);
    }
    csv << (step + 1);
    for (double v : denormalized) csv << "," << full_precision(v);
    csv << "\n";
    steps.push_back(denormalized);

    if (step + 1 < opt.horizon) {
      // Drop the oldest step, append the predictions as the newest one.
      std::copy(window_values.begin() + static_cast<std::ptrdiff_t>(channels.size()),
                window_values.end(), window_values.begin());
      for (std::size_t c = 0; c < channels.size(); ++c) {
        window_values[(window - 1) * channels.size() + c] =
            normalized[feedback[c]];
      }
    }
  }

  fs::path dir(opt.out_dir);
  write_text(dir / "predictions.csv", csv.str());
  out << "next " << opt.horizon << " step(s), original units:\n";
  for (std::size_t s = 0; s < steps.size(); ++s) {
    out << "  step " << (s + 1) << ":";
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      out << " " << tasks[t] << "=" << fixed3(steps[s][t]);
    }
    out << "\n";
  }
  manifest.complete({"predictions.csv"});
  return kExitSuccess;
}

struct BenchOptions {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_dir;
  std::size_t repetitions = 100;
  std::size_t warm_up = 10;
};

int cmd_bench(const BenchOptions& opt, std::ostream& out) {
  if (opt.repetitions == 0) {
    throw ContractError("bench: repetitions must be at least 1");
  }
  HarnessCheckpoint ckpt = load_harness_checkpoint(opt.checkpoint_path);
  OhlcvSeries series = load_csv(opt.data_path);
  fs::create_directories(opt.out_dir);
  RunManifest manifest(opt.out_dir, "bench", ckpt.cfg, ckpt.cfg.model.seed,
                       {opt.checkpoint_path, opt.data_path});

  const std::size_t window = ckpt.cfg.model.window;
  if (series.size() <= window) {
    throw DataError(opt.data_path + ": need more than " +
                    std::to_string(window) + " rows to form a window");
  }
  const std::size_t n = series.size() - window;
  WindowedDataset data =
      build_windows(series, ckpt.normalizer, window, ckpt.cfg.input_channels,
                    ckpt.cfg.model.tasks, 0, n);

  NoGradGuard guard;
  HybridModel& model = *ckpt.loaded.model;
  auto window_tensor = [&](std::size_t i) {
    return slice(data.inputs, 0, i % n, 1);
  };
  for (std::size_t i = 0; i < opt.warm_up; ++i) {
    (void)model.forward(window_tensor(i), Mode::kInfer);
  }
  std::vector<double> samples(opt.repetitions);
  for (std::size_t r = 0; r < opt.repetitions; ++r) {
    Tensor x = window_tensor(r);
    auto t0 = std::chrono::steady_clock::now();
    (void)model.forward(x, Mode::kInfer);
    auto t1 = std::chrono::steady_clock::now();
    samples[r] = std::chrono::duration<double>(t1 - t0).count();
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size());
  double std_dev = std::sqrt(var);

  json report{{"batch_size", 1},
              {"warm_up_iterations", opt.warm_up},
              {"repetitions", opt.repetitions},
              {"mean_seconds_per_window", mean},
              {"std_seconds_per_window", std_dev},
              {"units", "seconds per window"},
              {"methodology",
               "steady state: timed single-window inferences at batch size 1 "
               "after the warm-up iterations, which are excluded"}};
  fs::path dir(opt.out_dir);
  write_text(dir / "bench.json", json_text(report));

  std::ostringstream mean_s, std_s;
  mean_s << std::scientific << std::setprecision(3) << mean;
  std_s << std::scientific << std::setprecision(3) << std_dev;
  out << "per-window inference: mean " << mean_s.str() << " s, std "
      << std_s.str() << " s over " << opt.repetitions << " repetitions ("
      << opt.warm_up << " warm-up iterations excluded, batch size 1)\n";
  manifest.complete({"bench.json"});
  return kExitSuccess;
}

struct SynthOptions {
  std::string kind = "sinusoid-mix";
  std::size_t length = 500;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
  SynthKind kind = parse_synth_kind(opt.kind);
  fs::create_directories(opt.out_dir);
  json config{{"kind", opt.kind}, {"length", opt.length}, {"seed", opt.seed}};
  RunManifest manifest(opt.out_dir, "synth", config, opt.seed, {});

  OhlcvSeries series = synth_series(kind, opt.length, opt.seed);
  fs::path dir(opt.out_dir);
  save_csv((dir / "series.csv").string(), series);
  out << "wrote " << series.size() << " rows of " << opt.kind << " to "
      << (dir / "series.csv").string() << "\n";
  manifest.complete({"series.csv"});
  return kExitSuccess;
}

int exit_code_for(const std::string& category) {
  if (category == "train") return kExitTraining;
  if (category == "dimension") return kExitInternal;
  // data*, config, contract, domain, io: some input or request was invalid.
  return kExitData;
}

}  // namespace

// ---- command line -------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"hybrid multi-task time-series forecaster", "hycast"};
  app.require_subcommand(1);

  // Shared train-style options (train and ablate read a config file and
  // allow field overrides).
  struct Overrides {
    std::uint64_t seed = 0;
    std::string variant;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    std::size_t patience = 0;
    std::size_t window = 0;
    double learning_rate = 0.0;
    double dropout = 0.0;
  };
  auto add_override_flags = [](CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "override model and train seeds");
    cmd->add_option("--variant", o.variant, "override the model variant");
    cmd->add_option("--epochs", o.epochs, "override train.max_epochs");
    cmd->add_option("--batch-size", o.batch_size, "override train.batch_size");
    cmd->add_option("--patience", o.patience, "override train.patience");
    cmd->add_option("--window", o.window, "override model.window");
    cmd->add_option("--learning-rate", o.learning_rate,
                    "override train.learning_rate");
    cmd->add_option("--dropout", o.dropout, "override model.dropout_rate");
  };
  auto apply_overrides = [](CLI::App* cmd, const Overrides& o,
                            HarnessConfig& cfg) {
    if (cmd->count("--seed") != 0) {
      cfg.model.seed = o.seed;
      cfg.train.seed = o.seed;
    }
    if (cmd->count("--variant") != 0) cfg.model.variant = parse_variant(o.variant);
    if (cmd->count("--epochs") != 0) cfg.train.max_epochs = o.epochs;
    if (cmd->count("--batch-size") != 0) cfg.train.batch_size = o.batch_size;
    if (cmd->count("--patience") != 0) cfg.train.patience = o.patience;
    if (cmd->count("--window") != 0) cfg.model.window = o.window;
    if (cmd->count("--learning-rate") != 0) {
      cfg.train.learning_rate = o.learning_rate;
    }
    if (cmd->count("--dropout") != 0) cfg.model.dropout_rate = o.dropout;
  };

  TrainOptions train_opt;
  Overrides train_over;
  CLI::App* train_cmd =
      app.add_subcommand("train", "fit a model and write a checkpoint");
  train_cmd->add_option("--config", train_opt.config_path,
                        "JSON config file (model/train/data sections)");
  train_cmd->add_option("--data", train_opt.data_path, "OHLCV csv")->required();
  train_cmd->add_option("--out-dir", train_opt.out_dir, "output directory")
      ->required();
  add_override_flags(train_cmd, train_over);

  EvaluateOptions eval_opt;
  CLI::App* eval_cmd = app.add_subcommand(
      "evaluate", "score a checkpoint on a chronological split");
  eval_cmd->add_option("--checkpoint", eval_opt.checkpoint_path, "checkpoint")
      ->required();
  eval_cmd->add_option("--data", eval_opt.data_path, "OHLCV csv")->required();
  eval_cmd->add_option("--out-dir", eval_opt.out_dir, "output directory")
      ->required();
  eval_cmd->add_option("--split", eval_opt.split, "train, val, or test");

  AblateOptions ablate_opt;
  Overrides ablate_over;
  CLI::App* ablate_cmd = app.add_subcommand(
      "ablate", "train several variants under one seed and budget");
  ablate_cmd->add_option("--config", ablate_opt.config_path, "JSON config file");
  ablate_cmd->add_option("--data", ablate_opt.data_path, "OHLCV csv")
      ->required();
  ablate_cmd->add_option("--out-dir", ablate_opt.out_dir, "output directory")
      ->required();
  ablate_cmd
      ->add_option("--variants", ablate_opt.variants,
                   "comma-separated variant list (at least two)")
      ->required()
      ->delimiter(',');
  add_override_flags(ablate_cmd, ablate_over);

  PredictOptions predict_opt;
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "roll the model forward from the end of a series");
  predict_cmd
      ->add_option("--checkpoint", predict_opt.checkpoint_path, "checkpoint")
      ->required();
  predict_cmd->add_option("--data", predict_opt.data_path, "OHLCV csv")
      ->required();
  predict_cmd->add_option("--out-dir", predict_opt.out_dir, "output directory")
      ->required();
  predict_cmd->add_option("--horizon", predict_opt.horizon,
                          "steps to predict (predictions feed back past 1)");

  BenchOptions bench_opt;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "time single-window inference");
  bench_cmd->add_option("--checkpoint", bench_opt.checkpoint_path, "checkpoint")
      ->required();
  bench_cmd->add_option("--data", bench_opt.data_path, "OHLCV csv")->required();
  bench_cmd->add_option("--out-dir", bench_opt.out_dir, "output directory")
      ->required();
  bench_cmd->add_option("--repetitions", bench_opt.repetitions,
                        "timed inferences");
  bench_cmd->add_option("--warm-up", bench_opt.warm_up,
                        "untimed inferences before measuring");

  SynthOptions synth_opt;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a deterministic OHLCV series");
  synth_cmd->add_option("--kind", synth_opt.kind,
                        "sinusoid-mix, trend-plus-noise, or regime-switch");
  synth_cmd->add_option("--length", synth_opt.length, "rows to generate");
  synth_cmd->add_option("--seed", synth_opt.seed, "generator seed");
  synth_cmd->add_option("--out-dir", synth_opt.out_dir, "output directory")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      HarnessConfig cfg;
      if (!train_opt.config_path.empty()) {
        cfg = load_harness_config(train_opt.config_path);
      }
      apply_overrides(train_cmd, train_over, cfg);
      cfg.resolve();
      return cmd_train(cfg, train_opt, out);
    }
    if (eval_cmd->parsed()) return cmd_evaluate(eval_opt, out);
    if (ablate_cmd->parsed()) {
      HarnessConfig cfg;
      if (!ablate_opt.config_path.empty()) {
        cfg = load_harness_config(ablate_opt.config_path);
      }
      apply_overrides(ablate_cmd, ablate_over, cfg);
      cfg.resolve();
      return cmd_ablate(cfg, ablate_opt, out);
    }
    if (predict_cmd->parsed()) return cmd_predict(predict_opt, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_opt, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_opt, out);
  } catch (const Error& e) {
    err << "error (" << e.category() << "): " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;  // require_subcommand(1) makes this unreachable
}

}  // namespace hycast
