#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "tlmdp/ppo/trainer.hpp"

namespace tlmdp::harness {

struct RunConfig {
  std::string dataset_path;
  ppo::TrainerConfig trainer;
  std::uint64_t seed = 0;
  int rounds = 200;
  std::string output_dir = "runs/default";
  int checkpoint_every = 0;  // 0 writes only the final checkpoint
  double ema_alpha = 0.1;
  bool plot_data = false;
  int eval_samples = 16;  // rollouts per dataset input in eval

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Flat "section.key = value" text. '#' starts a comment, blank lines are
// ignored. Every key is optional except dataset.path; unknown or repeated
// keys and unparsable values raise ConfigError naming the key.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Every key with its current value, in a form parse_config reads back
// to an identical RunConfig.
std::string serialize_config(const RunConfig& cfg);

// Known keys in serialization order.
std::vector<std::string> config_keys();

// run.output_dir unless the TLMDP_OUTPUT_DIR environment variable is set.
std::string effective_output_dir(const RunConfig& cfg);

}  // namespace tlmdp::harness
