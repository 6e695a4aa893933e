#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hycast/data.hpp"
#include "hycast/model.hpp"
#include "hycast/train.hpp"
#include "json.hpp"

namespace hycast {

// One run's full configuration: model topology, optimizer settings, and how
// the CSV becomes windows. Read from a single JSON document; command-line
// flags override individual fields. The model's channel count always follows
// the input channel list.
struct HarnessConfig {
  ModelConfig model;
  TrainConfig train;
  std::vector<std::string> input_channels = {"close"};
  SplitSpec split;

  // Syncs model.input_channels with the channel list and validates the
  // model and training sections.
  void resolve();
};

void to_json(nlohmann::json& j, const HarnessConfig& c);
void from_json(const nlohmann::json& j, HarnessConfig& c);
HarnessConfig load_harness_config(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded. Run manifests pin their inputs
// with it.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

// Exit codes of the command-line surface.
inline constexpr int kExitSuccess = 0;   // ran to completion
inline constexpr int kExitUsage = 1;     // unparseable command line
inline constexpr int kExitData = 2;      // invalid data, config, or request
inline constexpr int kExitTraining = 3;  // training diverged
inline constexpr int kExitInternal = 4;  // everything else

// Runs one command (train, evaluate, ablate, predict, bench, synth).
// `args` excludes the program name. Returns the exit code; human-readable
// output goes to `out`, categorized errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace hycast
