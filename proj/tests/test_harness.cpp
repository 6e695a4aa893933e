#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hycast/checkpoint.hpp"
#include "hycast/data.hpp"
#include "hycast/error.hpp"
#include "hycast/harness.hpp"
#include "json.hpp"

using namespace hycast;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case.
fs::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("hycast_harness_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

json read_json(const fs::path& path) { return json::parse(read_file(path)); }

// A small close-predicting setup used across the command tests.
std::string close_config_text(int epochs = 8) {
  json cfg{{"model",
            {{"variant", "bigru-only"},
             {"window", 4},
             {"bigru_hidden", 8},
             {"dropout_rate", 0.0},
             {"tasks", {"close"}},
             {"seed", 9}}},
           {"train",
            {{"max_epochs", epochs},
             {"batch_size", 16},
             {"patience", epochs},
             {"seed", 9}}},
           {"data", {{"input_channels", {"close"}}}}};
  return cfg.dump(2);
}

fs::path make_series(const fs::path& dir, std::size_t length = 160,
                     std::uint64_t seed = 3) {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, length, seed);
  fs::path path = dir / "series.csv";
  save_csv(path.string(), series);
  return path;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("usage problems exit with code 1") {
  std::string err;
  CHECK(cli({"no-such-command"}, nullptr, &err) == kExitUsage);
  CHECK(cli({}, nullptr, &err) == kExitUsage);          // subcommand required
  CHECK(cli({"train"}, nullptr, &err) == kExitUsage);   // --data missing
  CHECK(cli({"bench", "--bogus-flag", "1"}, nullptr, &err) == kExitUsage);
  CHECK(!err.empty());

  std::string out;
  CHECK(cli({"--help"}, &out) == kExitSuccess);
  CHECK(out.find("train") != std::string::npos);
  CHECK(out.find("synth") != std::string::npos);
}

TEST_CASE("synth writes a deterministic, loadable series") {
  fs::path dir = scratch_dir("synth");
  std::string out;
  REQUIRE(cli({"synth", "--kind", "trend-plus-noise", "--length", "90",
               "--seed", "4", "--out-dir", (dir / "a").string()},
              &out) == kExitSuccess);
  CHECK(out.find("90 rows") != std::string::npos);

  OhlcvSeries series = load_csv((dir / "a" / "series.csv").string());
  CHECK(series.size() == 90);

  REQUIRE(cli({"synth", "--kind", "trend-plus-noise", "--length", "90",
               "--seed", "4", "--out-dir", (dir / "b").string()}) ==
          kExitSuccess);
  CHECK(read_file(dir / "a" / "series.csv") ==
        read_file(dir / "b" / "series.csv"));

  json manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("command") == "synth");
  CHECK(manifest.at("outputs") == json::array({"series.csv"}));
  CHECK(manifest.at("timings").contains("total_seconds"));

  CHECK(cli({"synth", "--kind", "piecewise-cubic", "--length", "90",
             "--out-dir", (dir / "c").string()}) == kExitData);
  CHECK(cli({"synth", "--kind", "sinusoid-mix", "--length", "10", "--out-dir",
             (dir / "d").string()}) == kExitData);
}

TEST_CASE("train writes checkpoint, log, metrics, and a complete manifest") {
  fs::path dir = scratch_dir("train");
  fs::path data = make_series(dir);
  write_file(dir / "config.json", close_config_text());

  std::string out;
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "run").string()},
              &out) == kExitSuccess);
  CHECK(out.find("Methods") != std::string::npos);

  for (const char* name :
       {"model.ckpt", "train_log.json", "metrics.json", "predictions.csv",
        "manifest.json"}) {
    INFO("expecting ", name);
    CHECK(fs::exists(dir / "run" / name));
  }

  json manifest = read_json(dir / "run" / "manifest.json");
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("input_hashes").size() == 2);  // data + config
  CHECK(manifest.at("config").at("model").at("variant") == "bigru-only");
  CHECK(manifest.at("seed") == 9);

  json log = read_json(dir / "run" / "train_log.json");
  CHECK(log.at("epochs").size() == 8);
  CHECK(log.at("epochs")[0].contains("seconds"));

  json metrics = read_json(dir / "run" / "metrics.json");
  CHECK(metrics.at("test").at("tasks")[0].at("task") == "close");
  CHECK(metrics.at("test").at("tasks")[0].at("n") == 32);

  // Plot-ready CSV: header plus one row per test window.
  std::string preds = read_file(dir / "run" / "predictions.csv");
  CHECK(preds.rfind("timestep,date,close_actual,close_predicted", 0) == 0);
  CHECK(count_lines(preds) == 33);
}

TEST_CASE("two identically seeded runs produce byte-identical artifacts") {
  fs::path dir = scratch_dir("determinism");
  fs::path data = make_series(dir);
  write_file(dir / "config.json", close_config_text());

  for (const char* run : {"one", "two"}) {
    REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
                 data.string(), "--out-dir", (dir / run).string()}) ==
            kExitSuccess);
  }
  CHECK(read_file(dir / "one" / "model.ckpt") ==
        read_file(dir / "two" / "model.ckpt"));
  CHECK(read_file(dir / "one" / "metrics.json") ==
        read_file(dir / "two" / "metrics.json"));
  CHECK(read_file(dir / "one" / "predictions.csv") ==
        read_file(dir / "two" / "predictions.csv"));

  // A different seed must actually change the outcome.
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "three").string(), "--seed",
               "77"}) == kExitSuccess);
  CHECK(read_file(dir / "one" / "model.ckpt") !=
        read_file(dir / "three" / "model.ckpt"));
}

TEST_CASE("data and config problems exit with code 2") {
  fs::path dir = scratch_dir("data_errors");
  std::string err;

  CHECK(cli({"train", "--data", (dir / "missing.csv").string(), "--out-dir",
             (dir / "run").string()},
            nullptr, &err) == kExitData);
  CHECK(err.find("file-not-found") != std::string::npos);

  write_file(dir / "bad.json", "{not json");
  fs::path data = make_series(dir);
  CHECK(cli({"train", "--config", (dir / "bad.json").string(), "--data",
             data.string(), "--out-dir", (dir / "run").string()},
            nullptr, &err) == kExitData);

  CHECK(cli({"train", "--data", data.string(), "--out-dir",
             (dir / "run").string(), "--variant", "nonsense"},
            nullptr, &err) == kExitData);

  write_file(dir / "garbage.csv", "date,open\n2024-01-01,1\n");
  CHECK(cli({"train", "--data", (dir / "garbage.csv").string(), "--out-dir",
             (dir / "run").string()},
            nullptr, &err) == kExitData);
}

TEST_CASE("training on values that overflow the loss exits with code 3") {
  fs::path dir = scratch_dir("divergence");
  // Valid OHLCV rows, but two closes sit at the floating-point rim, so the
  // scaler's range overflows to infinity and those windows go NaN: the loss
  // leaves the reals on the first batch.
  std::ostringstream csv;
  csv << "date,open,high,low,close,volume,amount\n";
  for (int i = 0; i < 30; ++i) {
    double open = 100.0 + i, close = 101.0 + i;
    double high = 102.0 + i, low = 99.0 + i;
    if (i == 5) close = high = 1e308;
    if (i == 10) close = low = -1e308;
    csv << "2024-01-" << (i < 9 ? "0" : "") << (i + 1) << "," << open << ","
        << high << "," << low << "," << close << "," << 1000 + i << ","
        << (1000.0 + i) * 101.0 << "\n";
  }
  write_file(dir / "wild.csv", csv.str());
  write_file(dir / "config.json", close_config_text(2));

  std::string err;
  CHECK(cli({"train", "--config", (dir / "config.json").string(), "--data",
             (dir / "wild.csv").string(), "--out-dir",
             (dir / "run").string()},
            nullptr, &err) == kExitTraining);
  CHECK(err.find("diverged") != std::string::npos);

  // The run died mid-flight, so its manifest still says incomplete.
  json manifest = read_json(dir / "run" / "manifest.json");
  CHECK(manifest.at("status") == "incomplete");
}

TEST_CASE("evaluate reproduces the training-time test metrics exactly") {
  fs::path dir = scratch_dir("evaluate");
  fs::path data = make_series(dir);
  write_file(dir / "config.json", close_config_text());
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "run").string()}) ==
          kExitSuccess);

  REQUIRE(cli({"evaluate", "--checkpoint", (dir / "run" / "model.ckpt").string(),
               "--data", data.string(), "--out-dir",
               (dir / "eval").string()}) == kExitSuccess);

  json trained = read_json(dir / "run" / "metrics.json").at("test");
  json evaluated = read_json(dir / "eval" / "metrics.json").at("metrics");
  CHECK(trained == evaluated);  // stored scaler makes re-evaluation exact

  // Other splits work; unknown ones are refused.
  REQUIRE(cli({"evaluate", "--checkpoint", (dir / "run" / "model.ckpt").string(),
               "--data", data.string(), "--out-dir", (dir / "eval_val").string(),
               "--split", "val"}) == kExitSuccess);
  CHECK(read_json(dir / "eval_val" / "metrics.json").at("split") == "val");
  CHECK(cli({"evaluate", "--checkpoint", (dir / "run" / "model.ckpt").string(),
             "--data", data.string(), "--out-dir", (dir / "eval_bad").string(),
             "--split", "everything"}) == kExitData);
}

TEST_CASE("ablate compares variants under one seed and preserves order") {
  fs::path dir = scratch_dir("ablate");
  fs::path data = make_series(dir);
  write_file(dir / "config.json", close_config_text(3));

  std::string out;
  REQUIRE(cli({"ablate", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "cmp").string(),
               "--variants", "bigru-only,full"},
              &out) == kExitSuccess);

  CHECK(out.find("Methods") != std::string::npos);
  CHECK(out.find("Proposed method") != std::string::npos);
  CHECK(out.find("bigru-only") != std::string::npos);

  json doc = read_json(dir / "cmp" / "ablation.json");
  CHECK(doc.at("partial") == false);
  REQUIRE(doc.at("rows").size() == 2);
  CHECK(doc.at("rows")[0].at("variant") == "bigru-only");
  CHECK(doc.at("rows")[1].at("variant") == "full");
  CHECK(doc.at("rows")[1].at("method") == "Proposed method");

  std::string csv = read_file(dir / "cmp" / "ablation.csv");
  CHECK(csv.rfind("task,Methods,MAE,RMSE,MAPE,R²", 0) == 0);
  CHECK(count_lines(csv) == 3);  // header + close row per variant

  // The same variant listed twice trains identically (shared seed/budget).
  REQUIRE(cli({"ablate", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "twice").string(),
               "--variants", "bigru-only,bigru-only"}) == kExitSuccess);
  json twice = read_json(dir / "twice" / "ablation.json");
  CHECK(twice.at("rows")[0].at("test") == twice.at("rows")[1].at("test"));

  // Fewer than two variants is a validation error.
  CHECK(cli({"ablate", "--config", (dir / "config.json").string(), "--data",
             data.string(), "--out-dir", (dir / "one").string(), "--variants",
             "full"}) == kExitData);
}

TEST_CASE("a failing variant aborts the ablation but keeps partial results") {
  fs::path dir = scratch_dir("ablate_partial");
  fs::path data = make_series(dir);
  // Spline widths that are fine for bigru-only (unused) but invalid the
  // moment a KAN variant is built.
  json cfg = json::parse(close_config_text(2));
  cfg["model"]["kan"] = {{"widths", {3, 3}}};
  write_file(dir / "config.json", cfg.dump(2));

  std::string err;
  CHECK(cli({"ablate", "--config", (dir / "config.json").string(), "--data",
             data.string(), "--out-dir", (dir / "cmp").string(), "--variants",
             "bigru-only,kan-only"},
            nullptr, &err) == kExitData);

  json doc = read_json(dir / "cmp" / "ablation.json");
  CHECK(doc.at("partial") == true);
  CHECK(doc.at("failed_variant") == "kan-only");
  CHECK(doc.at("rows").size() == 1);
  CHECK(doc.at("rows")[0].at("variant") == "bigru-only");
  CHECK(!doc.at("error").get<std::string>().empty());

  json manifest = read_json(dir / "cmp" / "manifest.json");
  CHECK(manifest.at("status") == "incomplete");
}

TEST_CASE("predict rolls the window forward and reports original units") {
  fs::path dir = scratch_dir("predict");

  // Near-constant series: closes oscillate within half a unit of 100.
  OhlcvSeries series;
  double close = 100.0;
  for (std::size_t i = 0; i < 120; ++i) {
    double open = close;
    close = 100.0 + 0.5 * std::sin(2.0 * 3.14159265358979 *
                                   static_cast<double>(i) / 10.0);
    char stamp[16];
    std::snprintf(stamp, sizeof stamp, "2024-%02zu-%02zu", i / 28 + 1,
                  i % 28 + 1);
    series.timestamps.emplace_back(stamp);
    series.open.push_back(open);
    series.close.push_back(close);
    series.high.push_back(std::max(open, close) + 0.1);
    series.low.push_back(std::min(open, close) - 0.1);
    series.volume.push_back(1000.0 + static_cast<double>(i));
    series.amount.push_back((1000.0 + static_cast<double>(i)) * close);
  }
  fs::path data = dir / "flat.csv";
  save_csv(data.string(), series);

  write_file(dir / "config.json", close_config_text(30));
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "run").string()}) ==
          kExitSuccess);
  fs::path ckpt = dir / "run" / "model.ckpt";

  SUBCASE("horizon one emits a single row") {
    REQUIRE(cli({"predict", "--checkpoint", ckpt.string(), "--data",
                 data.string(), "--out-dir", (dir / "p1").string()}) ==
            kExitSuccess);
    std::string csv = read_file(dir / "p1" / "predictions.csv");
    CHECK(csv.rfind("step,close_predicted", 0) == 0);
    CHECK(count_lines(csv) == 2);
  }

  SUBCASE("a longer horizon continues near the level without drifting") {
    REQUIRE(cli({"predict", "--checkpoint", ckpt.string(), "--data",
                 data.string(), "--out-dir", (dir / "p3").string(),
                 "--horizon", "3"}) == kExitSuccess);
    std::string csv = read_file(dir / "p3" / "predictions.csv");
    REQUIRE(count_lines(csv) == 4);

    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    std::vector<double> preds;
    while (std::getline(lines, line)) {
      preds.push_back(std::stod(line.substr(line.find(',') + 1)));
    }
    REQUIRE(preds.size() == 3);
    for (std::size_t i = 1; i < preds.size(); ++i) {
      CHECK(std::abs(preds[i] - preds[i - 1]) < 1.0);  // < 1% of the level
    }
    for (double p : preds) CHECK(std::abs(p - 100.0) < 5.0);
  }

  SUBCASE("the first predicted value matches a manual forward pass") {
    REQUIRE(cli({"predict", "--checkpoint", ckpt.string(), "--data",
                 data.string(), "--out-dir", (dir / "pm").string()}) ==
            kExitSuccess);
    std::string csv = read_file(dir / "pm" / "predictions.csv");
    double reported = std::stod(csv.substr(csv.find("\n1,") + 3));

    LoadedCheckpoint loaded = load_checkpoint(ckpt.string());
    Normalizer norm;
    norm.set_ranges(
        loaded.extra.at("normalizer")
            .get<std::map<std::string, std::pair<double, double>>>());
    std::vector<double> window(4);
    for (std::size_t t = 0; t < 4; ++t) {
      window[t] = norm.transform("close", series.close[series.size() - 4 + t]);
    }
    Tensor x({1, 4, 1}, window);
    double manual = norm.inverse(
        "close", loaded.model->forward(x, Mode::kInfer)[0].values()[0]);
    CHECK(reported == doctest::Approx(manual).epsilon(1e-12));
  }

  SUBCASE("horizon zero is refused") {
    CHECK(cli({"predict", "--checkpoint", ckpt.string(), "--data",
               data.string(), "--out-dir", (dir / "p0").string(), "--horizon",
               "0"}) == kExitData);
  }
}

TEST_CASE("multi-step prediction requires inputs the model predicts") {
  fs::path dir = scratch_dir("predict_feedback");
  fs::path data = make_series(dir);
  // Inputs close+volume but only close predicted: rollout cannot refill the
  // volume channel.
  json cfg = json::parse(close_config_text(2));
  cfg["data"]["input_channels"] = {"close", "volume"};
  write_file(dir / "config.json", cfg.dump(2));
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "run").string()}) ==
          kExitSuccess);

  fs::path ckpt = dir / "run" / "model.ckpt";
  REQUIRE(cli({"predict", "--checkpoint", ckpt.string(), "--data",
               data.string(), "--out-dir", (dir / "p1").string(),
               "--horizon", "1"}) == kExitSuccess);

  std::string err;
  CHECK(cli({"predict", "--checkpoint", ckpt.string(), "--data", data.string(),
             "--out-dir", (dir / "p2").string(), "--horizon", "2"},
            nullptr, &err) == kExitData);
  CHECK(err.find("volume") != std::string::npos);
}

TEST_CASE("bench reports the documented timing schema") {
  fs::path dir = scratch_dir("bench");
  fs::path data = make_series(dir);
  write_file(dir / "config.json", close_config_text(2));
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data",
               data.string(), "--out-dir", (dir / "run").string()}) ==
          kExitSuccess);
  fs::path ckpt = dir / "run" / "model.ckpt";

  std::string out;
  REQUIRE(cli({"bench", "--checkpoint", ckpt.string(), "--data", data.string(),
               "--out-dir", (dir / "b").string(), "--repetitions", "40"},
              &out) == kExitSuccess);
  CHECK(out.find("warm-up") != std::string::npos);

  json report = read_json(dir / "b" / "bench.json");
  CHECK(report.at("batch_size") == 1);
  CHECK(report.at("repetitions") == 40);
  CHECK(report.at("warm_up_iterations") == 10);
  CHECK(report.at("units") == "seconds per window");
  CHECK(report.at("mean_seconds_per_window").get<double>() > 0.0);
  CHECK(report.at("std_seconds_per_window").get<double>() >= 0.0);
  CHECK(report.contains("methodology"));

  // Stability: two benches of the same checkpoint land in the same ballpark
  // (documented empirical bound: means differ by less than 50%).
  REQUIRE(cli({"bench", "--checkpoint", ckpt.string(), "--data", data.string(),
               "--out-dir", (dir / "b2").string(), "--repetitions", "40"}) ==
          kExitSuccess);
  double m1 = report.at("mean_seconds_per_window").get<double>();
  double m2 = read_json(dir / "b2" / "bench.json")
                  .at("mean_seconds_per_window")
                  .get<double>();
  CHECK(std::abs(m1 - m2) < 0.5 * std::max(m1, m2));

  CHECK(cli({"bench", "--checkpoint", ckpt.string(), "--data", data.string(),
             "--out-dir", (dir / "b0").string(), "--repetitions", "0"}) ==
        kExitData);

  // Checkpoints not written by the train command carry no harness state.
  write_file(dir / "fake.ckpt", "HYCKPT01garbage");
  CHECK(cli({"bench", "--checkpoint", (dir / "fake.ckpt").string(), "--data",
             data.string(), "--out-dir", (dir / "b3").string()}) == kExitData);
}

TEST_CASE("the harness config document resolves and validates") {
  HarnessConfig cfg = json::parse(close_config_text()).get<HarnessConfig>();
  cfg.resolve();
  CHECK(cfg.model.input_channels == 1);
  CHECK(cfg.model.variant == Variant::kBigruOnly);
  CHECK(cfg.train.max_epochs == 8);

  cfg.input_channels = {"close", "volume", "amount"};
  cfg.resolve();
  CHECK(cfg.model.input_channels == 3);

  cfg.input_channels = {};
  CHECK_THROWS_AS(cfg.resolve(), ConfigError);

  HarnessConfig bad;
  bad.train.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
}

TEST_CASE("content hashing is stable and sensitive") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
  CHECK(fnv1a_hex("abc") == fnv1a_hex("abc"));

  fs::path dir = scratch_dir("hash");
  write_file(dir / "x.txt", "abc");
  CHECK(hash_file((dir / "x.txt").string()) == fnv1a_hex("abc"));
  CHECK_THROWS_AS((void)hash_file((dir / "missing.txt").string()), DataError);
}
