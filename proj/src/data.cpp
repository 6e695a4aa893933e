#include "hycast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "hycast/error.hpp"

namespace hycast {

// ---- series -------------------------------------------------------------------

const std::array<const char*, 6>& OhlcvSeries::channel_names() {
  static const std::array<const char*, 6> kNames = {
      "open", "high", "low", "close", "volume", "amount"};
  return kNames;
}

const std::vector<double>& OhlcvSeries::channel(const std::string& name) const {
  return const_cast<OhlcvSeries*>(this)->channel(name);
}

std::vector<double>& OhlcvSeries::channel(const std::string& name) {
  if (name == "open") return open;
  if (name == "high") return high;
  if (name == "low") return low;
  if (name == "close") return close;
  if (name == "volume") return volume;
  if (name == "amount") return amount;
  throw ConfigError("unknown channel \"" + name +
                    "\"; expected one of open, high, low, close, volume, "
                    "amount");
}

// ---- csv ----------------------------------------------------------------------

namespace {

constexpr const char* kHeader = "date,open,high,low,close,volume,amount";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_number(const std::string& field, std::size_t line_number) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &consumed);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_number) +
                    ": malformed number \"" + field + "\"");
  }
  if (consumed != field.size()) {
    throw DataError("line " + std::to_string(line_number) +
                    ": malformed number \"" + field + "\"");
  }
  return value;
}

struct RawRow {
  std::string date;
  double v[6];
  std::size_t line;
};

std::string join_lines(const std::vector<std::size_t>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += (i == 0 ? "" : ", ") + std::to_string(lines[i]);
  }
  return out;
}

}  // namespace

OhlcvSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path, "data/file-not-found");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw DataError(path + ": header must be \"" + kHeader + "\", got \"" +
                    line + "\"");
  }

  std::vector<RawRow> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 7) {
      throw DataError("line " + std::to_string(line_number) + ": expected 7 "
                      "fields, got " + std::to_string(fields.size()));
    }
    RawRow row;
    row.date = fields[0];
    row.line = line_number;
    for (std::size_t i = 0; i < 6; ++i) {
      row.v[i] = parse_number(fields[i + 1], line_number);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + " has a header but no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const RawRow& a, const RawRow& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].date == rows[i - 1].date) {
      throw DataError("duplicate date " + rows[i].date + " (lines " +
                      std::to_string(rows[i - 1].line) + " and " +
                      std::to_string(rows[i].line) + ")");
    }
  }

  std::vector<std::size_t> bad_rows;
  for (const RawRow& row : rows) {
    double open = row.v[0], high = row.v[1], low = row.v[2], close = row.v[3];
    double volume = row.v[4], amount = row.v[5];
    bool ohlc_ok = low <= std::min(open, close) &&
                   std::max(open, close) <= high;
    if (!ohlc_ok || volume < 0.0 || amount < 0.0) bad_rows.push_back(row.line);
  }
  if (!bad_rows.empty()) {
    std::sort(bad_rows.begin(), bad_rows.end());
    throw DataError("rows violating OHLC/volume invariants at lines [" +
                    join_lines(bad_rows) + "]");
  }

  OhlcvSeries series;
  for (const RawRow& row : rows) {
    series.timestamps.push_back(row.date);
    series.open.push_back(row.v[0]);
    series.high.push_back(row.v[1]);
    series.low.push_back(row.v[2]);
    series.close.push_back(row.v[3]);
    series.volume.push_back(row.v[4]);
    series.amount.push_back(row.v[5]);
  }
  return series;
}

void save_csv(const std::string& path, const OhlcvSeries& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << kHeader << "\n";
  char buffer[256];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buffer, sizeof buffer,
                  "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  series.timestamps[i].c_str(), series.open[i], series.high[i],
                  series.low[i], series.close[i], series.volume[i],
                  series.amount[i]);
    out << buffer << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

// ---- normalizer ------------------------------------------------------------------

Normalizer Normalizer::fit(const OhlcvSeries& series, std::size_t fit_rows) {
  if (fit_rows < 2 || fit_rows > series.size()) {
    throw ContractError("normalizer fit span must cover 2.." +
                        std::to_string(series.size()) + " rows, got " +
                        std::to_string(fit_rows));
  }
  Normalizer norm;
  for (const char* name : OhlcvSeries::channel_names()) {
    const std::vector<double>& values = series.channel(name);
    double lo = values[0], hi = values[0];
    for (std::size_t i = 1; i < fit_rows; ++i) {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
    if (!(hi > lo)) {
      throw DataError("channel " + std::string(name) +
                      " has zero range on the fit span (min == max == " +
                      std::to_string(lo) + "); min-max scaling undefined");
    }
    norm.ranges_[name] = {lo, hi};
  }
  return norm;
}

const std::pair<double, double>& Normalizer::range_of(
    const std::string& channel) const {
  auto it = ranges_.find(channel);
  if (it == ranges_.end()) {
    throw ContractError("normalizer has no statistics for channel \"" +
                        channel + "\"");
  }
  return it->second;
}

double Normalizer::transform(const std::string& channel, double v) const {
  const auto& [lo, hi] = range_of(channel);
  return (v - lo) / (hi - lo);
}

double Normalizer::inverse(const std::string& channel, double v) const {
  const auto& [lo, hi] = range_of(channel);
  return lo + v * (hi - lo);
}

// ---- windowing ---------------------------------------------------------------------

WindowedDataset build_windows(const OhlcvSeries& series,
                              const Normalizer& norm, std::size_t window,
                              const std::vector<std::string>& input_channels,
                              const std::vector<std::string>& task_channels,
                              std::size_t first, std::size_t count) {
  WindowedDataset out;
  std::size_t channels = input_channels.size();
  std::vector<double> inputs(count * window * channels);
  std::vector<std::vector<double>> targets(task_channels.size());
  for (auto& t : targets) t.resize(count);

  for (std::size_t w = 0; w < count; ++w) {
    std::size_t start = first + w;
    for (std::size_t t = 0; t < window; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        double raw = series.channel(input_channels[c])[start + t];
        inputs[(w * window + t) * channels + c] =
            norm.transform(input_channels[c], raw);
      }
    }
    std::size_t target_row = start + window;
    out.target_rows.push_back(target_row);
    for (std::size_t k = 0; k < task_channels.size(); ++k) {
      targets[k][w] =
          norm.transform(task_channels[k], series.channel(task_channels[k])[target_row]);
    }
  }

  out.inputs = Tensor({count, window, channels}, std::move(inputs));
  for (auto& t : targets) {
    out.targets.push_back(Tensor({count, 1}, std::move(t)));
  }
  return out;
}

WindowBundle make_windows(const OhlcvSeries& series, std::size_t window,
                          const std::vector<std::string>& input_channels,
                          const std::vector<std::string>& task_channels,
                          SplitSpec split) {
  if (window == 0) throw ContractError("window must be positive");
  if (input_channels.empty()) throw ContractError("input_channels empty");
  if (task_channels.empty()) throw ContractError("task_channels empty");
  for (const auto& name : input_channels) series.channel(name);  // validates
  for (const auto& name : task_channels) series.channel(name);
  if (!(split.train_frac > 0.0 && split.val_frac > 0.0 &&
        split.train_frac + split.val_frac < 1.0)) {
    throw ContractError("split fractions must be positive and sum below 1");
  }

  std::size_t n = series.size() > window ? series.size() - window : 0;
  std::size_t n_train = static_cast<std::size_t>(split.train_frac * n);
  std::size_t n_val = static_cast<std::size_t>(split.val_frac * n);
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    // Smallest length where every split holds at least one window.
    std::size_t minimum = window + 3;
    while (true) {
      std::size_t m = minimum - window;
      std::size_t t = static_cast<std::size_t>(split.train_frac * m);
      std::size_t v = static_cast<std::size_t>(split.val_frac * m);
      if (t >= 1 && v >= 1 && t + v < m) break;
      ++minimum;
    }
    throw ContractError("series too short: " + std::to_string(series.size()) +
                        " rows yield " + std::to_string(n) + " windows; need "
                        "at least " + std::to_string(minimum) + " rows for "
                        "nonempty train/val/test splits");
  }
  std::size_t n_test = n - n_train - n_val;

  WindowBundle bundle;
  bundle.window = window;
  bundle.input_channels = input_channels;
  bundle.task_channels = task_channels;
  // Training windows touch source rows [0, n_train - 1 + window]; fit the
  // scaler on exactly that span so no validation/test value leaks in.
  bundle.normalizer = Normalizer::fit(series, n_train + window);
  bundle.train = build_windows(series, bundle.normalizer, window,
                               input_channels, task_channels, 0, n_train);
  bundle.val = build_windows(series, bundle.normalizer, window, input_channels,
                             task_channels, n_train, n_val);
  bundle.test = build_windows(series, bundle.normalizer, window,
                              input_channels, task_channels, n_train + n_val,
                              n_test);
  return bundle;
}

// ---- synthetic series -----------------------------------------------------------

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "sinusoid-mix") return SynthKind::kSinusoidMix;
  if (name == "trend-plus-noise") return SynthKind::kTrendPlusNoise;
  if (name == "regime-switch") return SynthKind::kRegimeSwitch;
  throw ConfigError("unknown synthetic kind \"" + name + "\"; expected "
                    "sinusoid-mix, trend-plus-noise, or regime-switch");
}

std::string synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::kSinusoidMix: return "sinusoid-mix";
    case SynthKind::kTrendPlusNoise: return "trend-plus-noise";
    case SynthKind::kRegimeSwitch: return "regime-switch";
  }
  throw ContractError("synth_kind_name: unhandled enum value");
}

namespace {

// Civil-calendar day increment, starting 2015-01-01.
struct CivilDate {
  int year = 2015, month = 1, day = 1;

  void advance() {
    static const int kDays[12] = {31, 28, 31, 30, 31, 30,
                                  31, 31, 30, 31, 30, 31};
    bool leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    int in_month = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
    if (++day > in_month) {
      day = 1;
      if (++month > 12) {
        month = 1;
        ++year;
      }
    }
  }

  std::string str() const {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02d", year, month, day);
    return buffer;
  }
};

std::vector<double> synth_closes(SynthKind kind, std::size_t length,
                                 std::mt19937_64& rng) {
  std::vector<double> closes(length);
  switch (kind) {
    case SynthKind::kSinusoidMix: {
      // Noise-free mix of three seeded-phase sinusoids around level 100.
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
      for (std::size_t t = 0; t < length; ++t) {
        double x = static_cast<double>(t);
        closes[t] = 100.0 + 10.0 * std::sin(2.0 * std::numbers::pi * x / 23.0 + p1) +
                    6.0 * std::sin(2.0 * std::numbers::pi * x / 7.0 + p2) +
                    3.0 * std::sin(2.0 * std::numbers::pi * x / 67.0 + p3);
      }
      break;
    }
    case SynthKind::kTrendPlusNoise: {
      std::normal_distribution<double> noise(0.0, 1.5);
      for (std::size_t t = 0; t < length; ++t) {
        closes[t] = 50.0 + 0.05 * static_cast<double>(t) + noise(rng);
      }
      break;
    }
    case SynthKind::kRegimeSwitch: {
      std::normal_distribution<double> unit(0.0, 1.0);
      for (std::size_t t = 0; t < length; ++t) {
        double sigma = t < length / 2 ? 0.5 : 4.0;
        closes[t] = 100.0 + sigma * unit(rng);
      }
      break;
    }
  }
  for (double& c : closes) c = std::max(c, 1.0);
  return closes;
}

}  // namespace

OhlcvSeries synth_series(SynthKind kind, std::size_t length,
                         std::uint64_t seed) {
  if (length < 50) {
    throw ContractError("synthetic series length must be >= 50, got " +
                        std::to_string(length));
  }
  std::mt19937_64 rng(seed);
  std::vector<double> closes = synth_closes(kind, length, rng);

  OhlcvSeries series;
  CivilDate date;
  for (std::size_t t = 0; t < length; ++t) {
    double close = closes[t];
    double open = t == 0 ? close : closes[t - 1];
    double margin = 0.002 * (std::abs(open) + std::abs(close) + 1.0);
    double ret = t == 0 ? 0.0 : (close - open) / open;
    double volume = 5000.0 * (0.2 + 40.0 * std::abs(ret));
    series.timestamps.push_back(date.str());
    series.open.push_back(open);
    series.high.push_back(std::max(open, close) + margin);
    series.low.push_back(std::min(open, close) - margin);
    series.close.push_back(close);
    series.volume.push_back(volume);
    series.amount.push_back(volume * close);
    date.advance();
  }
  return series;
}

}  // namespace hycast
