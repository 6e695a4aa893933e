#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "hycast/data.hpp"
#include "hycast/error.hpp"

using namespace hycast;

namespace {

std::string write_fixture(const std::string& name, const std::string& body) {
  std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << body;
  return path;
}

// Ten clean rows with increasing dates and prices.
std::string clean_csv() {
  std::string body = "date,open,high,low,close,volume,amount\n";
  for (int i = 0; i < 10; ++i) {
    double open = 10.0 + i, close = 10.5 + i;
    char row[128];
    std::snprintf(row, sizeof row, "2024-01-%02d,%g,%g,%g,%g,1000,25000\n",
                  i + 1, open, close + 0.2, open - 0.2, close);
    body += row;
  }
  return body;
}

}  // namespace

// ---- csv loading -------------------------------------------------------------

TEST_CASE("well-formed file loads sorted with all channels") {
  std::string path = write_fixture("hycast_data_clean.csv", clean_csv());
  OhlcvSeries series = load_csv(path);
  REQUIRE(series.size() == 10);
  for (std::size_t i = 1; i < series.size(); ++i) {
    CHECK(series.timestamps[i] > series.timestamps[i - 1]);
  }
  CHECK(series.open[0] == doctest::Approx(10.0));
  CHECK(series.close[9] == doctest::Approx(19.5));
  CHECK(series.volume[3] == doctest::Approx(1000.0));
}

TEST_CASE("shuffled rows come back date-sorted") {
  std::string body =
      "date,open,high,low,close,volume,amount\n"
      "2024-03-05,11,12,10,11.5,100,1150\n"
      "2024-03-01,10,11,9,10.5,100,1050\n"
      "2024-03-03,10.5,11.5,9.5,11,100,1100\n";
  OhlcvSeries series =
      load_csv(write_fixture("hycast_data_shuffled.csv", body));
  REQUIRE(series.size() == 3);
  CHECK(series.timestamps[0] == "2024-03-01");
  CHECK(series.timestamps[2] == "2024-03-05");
  CHECK(series.close[0] == doctest::Approx(10.5));
  CHECK(series.close[2] == doctest::Approx(11.5));
}

TEST_CASE("invariant violations are rejected with line numbers") {
  std::string body =
      "date,open,high,low,close,volume,amount\n"
      "2024-03-01,10,11,9,10.5,100,1050\n"
      "2024-03-02,10,9.5,11,10.2,100,1020\n"  // low > high
      "2024-03-03,10,11,9,10.5,-5,1050\n";    // negative volume
  try {
    load_csv(write_fixture("hycast_data_invalid.csv", body));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string message = e.what();
    CHECK(message.find("3") != std::string::npos);
    CHECK(message.find("4") != std::string::npos);
  }
}

TEST_CASE("malformed numbers, duplicates, bad headers, empty files") {
  CHECK_THROWS_AS(
      load_csv(write_fixture("hycast_data_badnum.csv",
                             "date,open,high,low,close,volume,amount\n"
                             "2024-03-01,10,11,9,ten,100,1050\n")),
      DataError);
  CHECK_THROWS_AS(
      load_csv(write_fixture("hycast_data_dup.csv",
                             "date,open,high,low,close,volume,amount\n"
                             "2024-03-01,10,11,9,10.5,100,1050\n"
                             "2024-03-01,10,11,9,10.5,100,1050\n")),
      DataError);
  CHECK_THROWS_AS(load_csv(write_fixture("hycast_data_header.csv",
                                         "time,open,high,low,close,vol,amt\n"
                                         "2024-03-01,10,11,9,10.5,100,1\n")),
                  DataError);
  CHECK_THROWS_AS(load_csv(write_fixture("hycast_data_empty.csv", "")),
                  DataError);
  CHECK_THROWS_AS(
      load_csv(write_fixture("hycast_data_headeronly.csv",
                             "date,open,high,low,close,volume,amount\n")),
      DataError);
  try {
    load_csv("/no/such/file.csv");
    FAIL("missing file must throw");
  } catch (const DataError& e) {
    CHECK(e.category() == "data/file-not-found");
  }
}

TEST_CASE("save then load preserves every value exactly") {
  OhlcvSeries series = synth_series(SynthKind::kTrendPlusNoise, 60, 5);
  std::string path =
      (std::filesystem::temp_directory_path() / "hycast_data_roundtrip.csv")
          .string();
  save_csv(path, series);
  OhlcvSeries back = load_csv(path);
  REQUIRE(back.size() == series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    CHECK(back.timestamps[i] == series.timestamps[i]);
    CHECK(back.open[i] == series.open[i]);
    CHECK(back.high[i] == series.high[i]);
    CHECK(back.low[i] == series.low[i]);
    CHECK(back.close[i] == series.close[i]);
    CHECK(back.volume[i] == series.volume[i]);
    CHECK(back.amount[i] == series.amount[i]);
  }
}

// ---- normalizer -----------------------------------------------------------------

TEST_CASE("normalizer maps the fit span to [0,1] and round-trips") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 80, 11);
  Normalizer norm = Normalizer::fit(series, 60);

  std::mt19937_64 rng(2);
  for (const char* name : OhlcvSeries::channel_names()) {
    double lo = norm.ranges().at(name).first;
    double hi = norm.ranges().at(name).second;
    CHECK(norm.transform(name, lo) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(norm.transform(name, hi) == doctest::Approx(1.0).epsilon(1e-12));
    // Round-trip tolerance scales with the channel's magnitude: 1e-12
    // relative precision is what 64-bit floats can promise on channels
    // spanning 1e6.
    double span = hi - lo;
    double tolerance = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    std::uniform_real_distribution<double> dist(lo - 0.2 * span,
                                                hi + 0.2 * span);
    for (int trial = 0; trial < 50; ++trial) {
      double v = dist(rng);
      CHECK(std::abs(norm.inverse(name, norm.transform(name, v)) - v) <
            tolerance);
    }
    // Values inside the fit span always land inside [0,1].
    for (std::size_t i = 0; i < 60; ++i) {
      double z = norm.transform(name, series.channel(name)[i]);
      CHECK(z >= 0.0);
      CHECK(z <= 1.0);
    }
  }
}

TEST_CASE("rows beyond the fit span do not touch the statistics") {
  OhlcvSeries series = synth_series(SynthKind::kTrendPlusNoise, 100, 7);
  series.close[90] = 1e6;  // a huge value after the fit span
  Normalizer norm = Normalizer::fit(series, 80);
  double hi = norm.ranges().at("close").second;
  CHECK(hi < 1000.0);
  CHECK(norm.transform("close", series.close[90]) > 1.0);
}

TEST_CASE("zero-range channels are rejected by name") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 60, 3);
  for (double& v : series.volume) v = 777.0;
  try {
    Normalizer::fit(series, 50);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("volume") != std::string::npos);
  }
}

// ---- windowing -------------------------------------------------------------------

TEST_CASE("length 100 with window 5 splits 66/9/20") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 100, 42);
  WindowBundle bundle =
      make_windows(series, 5, {"close"}, {"volume", "amount"}, {0.7, 0.1});
  CHECK(bundle.train.count() == 66);
  CHECK(bundle.val.count() == 9);
  CHECK(bundle.test.count() == 20);
  CHECK(bundle.train.inputs.shape() == Shape{66, 5, 1});
  CHECK(bundle.train.targets.size() == 2);
  CHECK(bundle.train.targets[0].shape() == Shape{66, 1});
}

TEST_CASE("windows never leak and splits are chronological") {
  OhlcvSeries series = synth_series(SynthKind::kTrendPlusNoise, 120, 9);
  WindowBundle bundle =
      make_windows(series, 6, {"open", "close"}, {"close"}, {0.7, 0.1});

  auto check_no_leak = [&](const WindowedDataset& split, std::size_t first) {
    for (std::size_t w = 0; w < split.count(); ++w) {
      std::size_t target_row = split.target_rows[w];
      std::size_t last_input_row = first + w + 6 - 1;
      CHECK(last_input_row < target_row);
      CHECK(series.timestamps[last_input_row] <
            series.timestamps[target_row]);
    }
  };
  std::size_t n_train = bundle.train.count();
  std::size_t n_val = bundle.val.count();
  check_no_leak(bundle.train, 0);
  check_no_leak(bundle.val, n_train);
  check_no_leak(bundle.test, n_train + n_val);

  CHECK(bundle.train.target_rows.back() < bundle.val.target_rows.front());
  CHECK(bundle.val.target_rows.back() < bundle.test.target_rows.front());
}

TEST_CASE("window contents invert back to the source values") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 90, 13);
  WindowBundle bundle =
      make_windows(series, 4, {"open", "close"}, {"close"}, {0.7, 0.1});

  const Tensor& inputs = bundle.val.inputs;
  std::size_t first = bundle.train.count();
  for (std::size_t w = 0; w < bundle.val.count(); ++w) {
    for (std::size_t t = 0; t < 4; ++t) {
      double z_open = inputs.values()[(w * 4 + t) * 2 + 0];
      double z_close = inputs.values()[(w * 4 + t) * 2 + 1];
      CHECK(std::abs(bundle.normalizer.inverse("open", z_open) -
                     series.open[first + w + t]) < 1e-12);
      CHECK(std::abs(bundle.normalizer.inverse("close", z_close) -
                     series.close[first + w + t]) < 1e-12);
    }
    double z_target = bundle.val.targets[0].values()[w];
    CHECK(std::abs(bundle.normalizer.inverse("close", z_target) -
                   series.close[bundle.val.target_rows[w]]) < 1e-12);
  }
}

TEST_CASE("short series and bad channels are rejected") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 50, 1);
  try {
    make_windows(series, 45, {"close"}, {"close"}, {0.7, 0.1});
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("at least") != std::string::npos);
  }
  CHECK_THROWS_AS(make_windows(series, 5, {"typo"}, {"close"}, {0.7, 0.1}),
                  ConfigError);
  CHECK_THROWS_AS(make_windows(series, 5, {"close"}, {"close"}, {0.9, 0.2}),
                  ContractError);
}

// ---- synthetic generator ------------------------------------------------------------

TEST_CASE("same seed gives the same series, different seed differs") {
  for (SynthKind kind : {SynthKind::kSinusoidMix, SynthKind::kTrendPlusNoise,
                         SynthKind::kRegimeSwitch}) {
    OhlcvSeries a = synth_series(kind, 64, 123);
    OhlcvSeries b = synth_series(kind, 64, 123);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.close[i] == b.close[i]);
      CHECK(a.volume[i] == b.volume[i]);
      CHECK(a.timestamps[i] == b.timestamps[i]);
    }
    OhlcvSeries c = synth_series(kind, 64, 124);
    bool differs = false;
    for (std::size_t i = 0; i < a.size() && !differs; ++i) {
      differs = a.close[i] != c.close[i];
    }
    CHECK(differs);
  }
}

TEST_CASE("sinusoid closes follow the documented closed form") {
  std::uint64_t seed = 31;
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 70, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  for (std::size_t t = 0; t < series.size(); ++t) {
    double x = static_cast<double>(t);
    double expected =
        100.0 + 10.0 * std::sin(2.0 * std::numbers::pi * x / 23.0 + p1) +
        6.0 * std::sin(2.0 * std::numbers::pi * x / 7.0 + p2) +
        3.0 * std::sin(2.0 * std::numbers::pi * x / 67.0 + p3);
    CHECK(series.close[t] == std::max(expected, 1.0));
  }
}

TEST_CASE("synthetic series satisfy the record invariants") {
  for (SynthKind kind : {SynthKind::kSinusoidMix, SynthKind::kTrendPlusNoise,
                         SynthKind::kRegimeSwitch}) {
    OhlcvSeries series = synth_series(kind, 200, 77);
    for (std::size_t i = 0; i < series.size(); ++i) {
      CHECK(series.low[i] < std::min(series.open[i], series.close[i]));
      CHECK(std::max(series.open[i], series.close[i]) < series.high[i]);
      CHECK(series.volume[i] > 0.0);
      CHECK(series.amount[i] > 0.0);
      CHECK(series.amount[i] ==
            doctest::Approx(series.volume[i] * series.close[i]));
      if (i > 0) {
        CHECK(series.timestamps[i] > series.timestamps[i - 1]);
        CHECK(series.open[i] == series.close[i - 1]);
      }
    }
  }
}

TEST_CASE("regime switch doubles its variance visibly") {
  OhlcvSeries series = synth_series(SynthKind::kRegimeSwitch, 400, 5);
  auto variance = [&](std::size_t lo, std::size_t hi) {
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += series.close[i];
    mean /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      var += (series.close[i] - mean) * (series.close[i] - mean);
    }
    return var / static_cast<double>(hi - lo);
  };
  CHECK(variance(200, 400) / variance(0, 200) > 4.0);
}

TEST_CASE("kind names and length bounds") {
  CHECK(parse_synth_kind("sinusoid-mix") == SynthKind::kSinusoidMix);
  CHECK(synth_kind_name(SynthKind::kRegimeSwitch) == "regime-switch");
  CHECK_THROWS_AS(parse_synth_kind("brownian"), ConfigError);
  CHECK_THROWS_AS(synth_series(SynthKind::kSinusoidMix, 49, 1), ContractError);
}

TEST_CASE("timestamps roll over month and year boundaries correctly") {
  OhlcvSeries series = synth_series(SynthKind::kSinusoidMix, 400, 8);
  CHECK(series.timestamps[0] == "2015-01-01");
  CHECK(series.timestamps[30] == "2015-01-31");
  CHECK(series.timestamps[31] == "2015-02-01");
  CHECK(series.timestamps[58] == "2015-02-28");
  CHECK(series.timestamps[59] == "2015-03-01");  // 2015 is not a leap year
  CHECK(series.timestamps[364] == "2015-12-31");
  CHECK(series.timestamps[365] == "2016-01-01");
}
