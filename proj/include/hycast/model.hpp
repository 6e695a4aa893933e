#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hycast/attention.hpp"
#include "hycast/gru.hpp"
#include "hycast/kan.hpp"
#include "hycast/layers.hpp"
#include "hycast/tensor.hpp"

namespace hycast {

// Which blocks the forecaster stacks. `kFull` is the whole pipeline
// (projection, transformer encoder, KAN, GRU, BiGRU, gated tail); the rest
// keep a subset for ablation runs.
enum class Variant {
  kFull,
  kKanOnly,
  kTransformerOnly,
  kBigruOnly,
  kKanTransformer,
  kTransformerBigru,
  kKanBigru,
};

Variant parse_variant(const std::string& name);  // ConfigError on unknown
std::string variant_name(Variant variant);
const std::vector<Variant>& all_variants();

struct KanConfig {
  bool enabled = true;
  std::size_t grid_intervals = 5;
  std::size_t degree = 3;
  double t_min = -2.0;
  double t_max = 2.0;
  // Layer widths, first entry must equal d_model; empty means
  // {d_model, d_model} (one square layer).
  std::vector<std::size_t> widths;
};

struct ModelConfig {
  std::size_t window = 5;          // time steps per input sample
  std::size_t input_channels = 1;  // features per time step
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t encoder_layers = 1;
  KanConfig kan;
  std::size_t gru_hidden = 32;
  std::size_t bigru_hidden = 128;
  double dropout_rate = 0.2;
  Variant variant = Variant::kFull;
  std::vector<std::string> tasks = {"volume", "amount"};
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError naming the offending field
  std::vector<std::size_t> kan_widths() const;

  bool uses_input_projection() const;
  bool uses_encoder() const;
  bool uses_kan() const;
  bool uses_gru() const;
  bool uses_bigru() const;
};

// One row of the construction-time shape trace, doubling as the parameter
// audit: computed counts next to the reference configuration table's
// published counts where that table has a matching row.
struct StageReport {
  std::string stage;
  std::string output_shape;  // "(batch, 5, 32)" style
  std::size_t params = 0;
  long long reference = -1;  // published count; -1 = no matching row
  bool consistent = true;    // false when reference >= 0 and != params
  std::string note;
};

std::string format_stage_shape(const std::vector<std::size_t>& trailing);

// A named intermediate activation, for diagnostics and tests.
struct StageValue {
  std::string stage;
  Tensor value;
};

// The assembled forecaster: a variant-selected trunk followed by the gated
// tail (batch norm, dropout, temporal attention, batch norm, dropout,
// flatten, dropout) and one scalar dense head per task.
class HybridModel {
 public:
  explicit HybridModel(const ModelConfig& config);

  // Per-task predictions, each (batch, 1), in config().tasks order.
  std::vector<Tensor> forward(const Tensor& batch, Mode mode);
  // Same computation, returning every stage's output (heads last).
  std::vector<StageValue> forward_trace(const Tensor& batch, Mode mode);

  const ModelConfig& config() const { return config_; }
  const std::vector<StageReport>& shape_trace() const { return trace_; }
  const std::vector<StageReport>& parameter_audit() const { return trace_; }

  // Trainable tensors, uniquely named. `checkpoint_state` adds the batch
  // norm running statistics, which belong in a checkpoint but not in the
  // optimizer.
  ParamList parameters();
  ParamList checkpoint_state();
  std::size_t parameter_count();

  std::size_t trunk_width() const { return trunk_width_; }
  std::size_t flat_width() const { return config_.window * trunk_width_; }

  BatchNormLayer& batch_norm1() { return *bn1_; }
  BatchNormLayer& batch_norm2() { return *bn2_; }

 private:
  std::vector<Tensor> run(const Tensor& batch, Mode mode,
                          std::vector<StageValue>* record);

  ModelConfig config_;
  std::size_t trunk_width_ = 0;
  std::vector<StageReport> trace_;
  std::mt19937_64 dropout_rng_;

  std::optional<DenseLayer> input_proj_;
  std::vector<EncoderLayer> encoder_;
  std::optional<KanStack> kan_;
  std::optional<DenseLayer> gru_in_proj_;
  std::optional<GruCell> gru_;
  std::optional<BiGru> bigru_;
  std::optional<BatchNormLayer> bn1_;
  std::optional<BatchNormLayer> bn2_;
  std::optional<DropoutLayer> dropout_;
  std::optional<TemporalAttention> temporal_;
  std::vector<DenseLayer> heads_;
};

}  // namespace hycast
