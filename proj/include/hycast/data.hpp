#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hycast/tensor.hpp"

namespace hycast {

// Daily market records in canonical channel order. Timestamps are ISO-8601
// dates, strictly increasing after loading.
struct OhlcvSeries {
  std::vector<std::string> timestamps;
  std::vector<double> open;
  std::vector<double> high;
  std::vector<double> low;
  std::vector<double> close;
  std::vector<double> volume;
  std::vector<double> amount;

  static const std::array<const char*, 6>& channel_names();
  std::size_t size() const { return timestamps.size(); }
  const std::vector<double>& channel(const std::string& name) const;
  std::vector<double>& channel(const std::string& name);
};

// Reads the documented schema: header `date,open,high,low,close,volume,amount`,
// ISO-8601 dates, period decimals. Rows are sorted by date; duplicate dates,
// malformed numbers, and OHLC-invariant violations (low <= open/close <= high,
// volume/amount >= 0) raise DataError naming the offending line numbers.
OhlcvSeries load_csv(const std::string& path);
void save_csv(const std::string& path, const OhlcvSeries& series);

// Per-channel min-max scaling to [0, 1], fitted on a leading span of rows so
// later splits never influence the statistics.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(const OhlcvSeries& series, std::size_t fit_rows);

  double transform(const std::string& channel, double v) const;
  double inverse(const std::string& channel, double v) const;

  // Channel name -> (min, max); exposed for serialization.
  const std::map<std::string, std::pair<double, double>>& ranges() const {
    return ranges_;
  }
  void set_ranges(std::map<std::string, std::pair<double, double>> ranges) {
    ranges_ = std::move(ranges);
  }

 private:
  const std::pair<double, double>& range_of(const std::string& channel) const;

  std::map<std::string, std::pair<double, double>> ranges_;
};

// Normalized windows ready for the model: inputs (n, T, channels), one
// (n, 1) target per task, and the source row index of every target for
// leakage checks and de-normalized reporting.
struct WindowedDataset {
  Tensor inputs;
  std::vector<Tensor> targets;
  std::vector<std::size_t> target_rows;

  std::size_t count() const { return target_rows.size(); }
};

struct SplitSpec {
  double train_frac = 0.7;
  double val_frac = 0.1;
};

struct WindowBundle {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
  Normalizer normalizer;
  std::vector<std::string> input_channels;
  std::vector<std::string> task_channels;
  std::size_t window = 0;
};

// Normalized windows for the `count` windows starting at window index
// `first`: window w covers rows [first+w, first+w+window) and targets row
// first+w+window. Used by make_windows and by cross-validation folds, which
// cut their own ranges with per-fold normalizers.
WindowedDataset build_windows(const OhlcvSeries& series, const Normalizer& norm,
                              std::size_t window,
                              const std::vector<std::string>& input_channels,
                              const std::vector<std::string>& task_channels,
                              std::size_t first, std::size_t count);

// Slides a length-`window` input over the series, predicting each task
// channel one step past the window. Windows split chronologically:
// floor(train_frac * n) train, floor(val_frac * n) validation, remainder
// test. The normalizer is fitted only on rows the training windows and
// targets touch, then applied everywhere.
WindowBundle make_windows(const OhlcvSeries& series, std::size_t window,
                          const std::vector<std::string>& input_channels,
                          const std::vector<std::string>& task_channels,
                          SplitSpec split);

enum class SynthKind { kSinusoidMix, kTrendPlusNoise, kRegimeSwitch };

SynthKind parse_synth_kind(const std::string& name);  // ConfigError if unknown
std::string synth_kind_name(SynthKind kind);

// Deterministic synthetic OHLCV series. Closes follow the kind's closed form
// (three seeded sinusoids around level 100; a drifting line plus Gaussian
// noise; or a flat level whose noise variance jumps 8x at half length);
// opens are the previous close, high/low bracket open/close by a small
// margin, and volume/amount are positive functions of the absolute return.
OhlcvSeries synth_series(SynthKind kind, std::size_t length,
                         std::uint64_t seed);

}  // namespace hycast
