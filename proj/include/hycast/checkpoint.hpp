#pragma once

#include <memory>
#include <string>

#include "hycast/model.hpp"
#include "hycast/train.hpp"
#include "json.hpp"

namespace hycast {

// JSON conversions for the model and training configuration; also the schema
// of the on-disk config file the command-line tools read.
void to_json(nlohmann::json& j, const KanConfig& c);
void from_json(const nlohmann::json& j, KanConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const EpochRecord& r);
void to_json(nlohmann::json& j, const TrainLog& log);

// Checkpoint container: an 8-byte magic, a little-endian u64 manifest length,
// a JSON manifest (format version, config, stage names, tensor names and
// shapes, caller extras), then each tensor's raw little-endian 64-bit floats
// in manifest order. Round-trips are bit-exact.
inline constexpr char kCheckpointMagic[9] = "HYCKPT01";
inline constexpr int kCheckpointVersion = 1;

// Serializes the model's trainable parameters and batch-norm running
// statistics. `extra` rides along in the manifest for auxiliary state such as
// normalizer channels.
void save_checkpoint(const std::string& path, HybridModel& model,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  ModelConfig config;
  nlohmann::json extra;
  std::unique_ptr<HybridModel> model;
};

// Rebuilds the model from the stored config and overwrites every tensor with
// the stored payload. Throws IoError on bad magic, version, manifest, or
// payload mismatch.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace hycast
