#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlmdp/core/gradcheck.hpp"
#include "tlmdp/harness/config.hpp"
#include "tlmdp/harness/metrics.hpp"

namespace tlmdp::harness {

struct RunPaths {
  std::string root;
  std::string metrics;
  std::string plot_data;
  std::string config_copy;
  std::string checkpoints;
  std::string checkpoint(int round) const;
};
RunPaths run_paths(const std::string& output_dir);

struct TrainResult {
  int first_round = 1;
  int rounds_completed = 0;
  std::string metrics_path;
  std::string last_checkpoint;
};

// Runs rounds [1, cfg.rounds] (or from the round after `resume`), appending
// one metrics record per round and writing checkpoints every
// run.checkpoint_every rounds plus one after the last round.
TrainResult cmd_train(const RunConfig& cfg, const std::optional<std::string>& resume,
                      std::ostream& log);

struct EvalReport {
  int checkpoint_round = 0;
  std::size_t samples = 0;
  std::size_t degenerate = 0;
  ppo::Stat composite, stage, subject, vehicle, aesthetic;
  double subject_cosine = 0.0;
  double max_vehicle_cosine = 0.0;
  double vehicle_fire_rate = 0.0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};
nlohmann::json to_json(const EvalReport& report);

// Final-stage prompts only: eval.samples rollouts per dataset input.
EvalReport evaluate_models(const ppo::Trainer& trainer, const ppo::Models& models,
                           std::uint64_t seed, int samples_per_input);
EvalReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path);

struct SampleRecord {
  std::string input_id;
  int stage = 0;
  std::vector<double> sample;
  reward::RewardBreakdown reward;
};
nlohmann::json to_json(const SampleRecord& record);
// One rollout of the stage-j prompt for every dataset input.
std::vector<SampleRecord> cmd_sample(const RunConfig& cfg, const std::string& checkpoint_path,
                                     int stage);

struct GradcheckCase {
  std::string name;  // "policy_surrogate/frozen", "policy_surrogate/perturbed", "critic_loss"
  int instance = 0;
  GradCheckReport report;
};
struct GradcheckSummary {
  std::vector<GradcheckCase> cases;
  double tolerance = 0.0;
  bool passed = false;
};
struct GradcheckOptions {
  int instances = 5;
  std::size_t latent_dim = 4;
  int steps = 3;
  std::size_t max_width = 32;  // hidden widths from the config are capped here
  // Negative control: the analytic policy gradient is deliberately damaged.
  bool corrupt_backward = false;
};
nlohmann::json to_json(const GradcheckSummary& summary);
GradcheckSummary cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& options = {});

}  // namespace tlmdp::harness
