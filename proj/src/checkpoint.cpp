#include "hycast/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hycast/error.hpp"

namespace hycast {

using nlohmann::json;

// ---- config <-> json --------------------------------------------------------

void to_json(json& j, const KanConfig& c) {
  j = json{{"enabled", c.enabled},
           {"grid_intervals", c.grid_intervals},
           {"degree", c.degree},
           {"t_min", c.t_min},
           {"t_max", c.t_max},
           {"widths", c.widths}};
}

void from_json(const json& j, KanConfig& c) {
  c.enabled = j.value("enabled", c.enabled);
  c.grid_intervals = j.value("grid_intervals", c.grid_intervals);
  c.degree = j.value("degree", c.degree);
  c.t_min = j.value("t_min", c.t_min);
  c.t_max = j.value("t_max", c.t_max);
  c.widths = j.value("widths", c.widths);
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"window", c.window},
           {"input_channels", c.input_channels},
           {"d_model", c.d_model},
           {"heads", c.heads},
           {"encoder_layers", c.encoder_layers},
           {"kan", c.kan},
           {"gru_hidden", c.gru_hidden},
           {"bigru_hidden", c.bigru_hidden},
           {"dropout_rate", c.dropout_rate},
           {"variant", variant_name(c.variant)},
           {"tasks", c.tasks},
           {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
  c.window = j.value("window", c.window);
  c.input_channels = j.value("input_channels", c.input_channels);
  c.d_model = j.value("d_model", c.d_model);
  c.heads = j.value("heads", c.heads);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  if (j.contains("kan")) j.at("kan").get_to(c.kan);
  c.gru_hidden = j.value("gru_hidden", c.gru_hidden);
  c.bigru_hidden = j.value("bigru_hidden", c.bigru_hidden);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  if (j.contains("variant")) {
    c.variant = parse_variant(j.at("variant").get<std::string>());
  }
  c.tasks = j.value("tasks", c.tasks);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"patience", c.patience},
           {"task_weights", c.task_weights},
           {"folds", c.folds},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.task_weights = j.value("task_weights", c.task_weights);
  c.folds = j.value("folds", c.folds);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const EpochRecord& r) {
  j = json{{"train_task_loss", r.train_task_loss},
           {"val_task_loss", r.val_task_loss},
           {"train_loss", r.train_loss},
           {"val_loss", r.val_loss},
           {"seconds", r.seconds}};
}

void to_json(json& j, const TrainLog& log) {
  j = json{{"epochs", log.epochs},
           {"best_epoch", log.best_epoch},
           {"best_val_loss", log.best_val_loss},
           {"early_stopped", log.early_stopped}};
}

// ---- binary plumbing ----------------------------------------------------------

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) {
    write_u64(out, std::bit_cast<std::uint64_t>(d));
  }
}

void read_doubles(std::istream& in, std::vector<double>& values) {
  for (double& d : values) {
    d = std::bit_cast<double>(read_u64(in));
  }
}

json shape_json(const Shape& shape) {
  json a = json::array();
  for (std::size_t e : shape) a.push_back(e);
  return a;
}

}  // namespace

// ---- save / load ----------------------------------------------------------------

void save_checkpoint(const std::string& path, HybridModel& model,
                     const json& extra) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");

  ParamList state = model.checkpoint_state();
  json stages = json::array();
  for (const StageReport& row : model.shape_trace()) stages.push_back(row.stage);
  json tensors = json::array();
  for (const NamedParam& p : state) {
    tensors.push_back({{"name", p.name}, {"shape", shape_json(p.tensor.shape())}});
  }
  json manifest = {{"format_version", kCheckpointVersion},
                   {"config", model.config()},
                   {"stages", stages},
                   {"tensors", tensors},
                   {"extra", extra}};
  std::string bytes = manifest.dump();

  out.write(kCheckpointMagic, 8);
  write_u64(out, bytes.size());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  for (const NamedParam& p : state) {
    write_doubles(out, p.tensor.values());
  }
  out.flush();
  if (!out) throw IoError("failed writing checkpoint to " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw IoError(path + " is not a checkpoint (bad magic)");
  }
  std::uint64_t manifest_size = read_u64(in);
  if (!in) throw IoError(path + ": truncated manifest header");
  std::uintmax_t remaining = std::filesystem::file_size(path) - 16;
  if (manifest_size > remaining) {
    throw IoError(path + ": manifest length " + std::to_string(manifest_size) +
                  " exceeds the file payload");
  }
  std::string bytes(manifest_size, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(manifest_size));
  if (!in) throw IoError(path + ": truncated manifest");

  json manifest;
  try {
    manifest = json::parse(bytes);
  } catch (const json::exception& e) {
    throw IoError(path + ": unreadable manifest: " + e.what());
  }
  int version = manifest.value("format_version", -1);
  if (version != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version));
  }

  LoadedCheckpoint loaded;
  try {
    loaded.config = manifest.at("config").get<ModelConfig>();
  } catch (const json::exception& e) {
    throw IoError(path + ": bad config in manifest: " + e.what());
  }
  loaded.extra = manifest.value("extra", json::object());
  loaded.model = std::make_unique<HybridModel>(loaded.config);

  ParamList state = loaded.model->checkpoint_state();
  const json& tensors = manifest.at("tensors");
  if (tensors.size() != state.size()) {
    throw IoError(path + ": manifest lists " + std::to_string(tensors.size()) +
                  " tensors, model has " + std::to_string(state.size()));
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    const json& entry = tensors.at(i);
    if (entry.at("name").get<std::string>() != state[i].name) {
      throw IoError(path + ": tensor " + std::to_string(i) + " is \"" +
                    entry.at("name").get<std::string>() + "\", expected \"" +
                    state[i].name + "\"");
    }
    Shape stored;
    for (const json& e : entry.at("shape")) stored.push_back(e.get<std::size_t>());
    if (stored != state[i].tensor.shape()) {
      throw IoError(path + ": tensor " + state[i].name + " stored as " +
                    shape_to_string(stored) + ", model expects " +
                    shape_to_string(state[i].tensor.shape()));
    }
    read_doubles(in, state[i].tensor.mutable_values());
    if (!in) throw IoError(path + ": truncated payload at " + state[i].name);
  }
  return loaded;
}

}  // namespace hycast
