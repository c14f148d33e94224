#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlmdp/advantage/critic.hpp"
#include "tlmdp/advantage/gae.hpp"
#include "tlmdp/core/adamw.hpp"
#include "tlmdp/diffusion/policy.hpp"
#include "tlmdp/ppo/pool.hpp"
#include "tlmdp/ppo/surrogate.hpp"
#include "tlmdp/reward/reward.hpp"
#include "tlmdp/staging/embedding.hpp"
#include "tlmdp/staging/factors.hpp"

namespace tlmdp::ppo {

enum class DatasetCycle { kShuffle, kSequential };

struct TrainerConfig {
  std::size_t inputs_per_round = 8;  // N
  int stages = 3;                    // C
  std::size_t latent_dim = 8;        // d
  std::uint64_t embedding_seed = 42;
  DatasetCycle cycle = DatasetCycle::kShuffle;

  diffusion::DiffusionConfig diffusion;
  std::vector<std::size_t> denoiser_hidden{128, 128};
  staging::VerifierConfig verifier;
  reward::RewardConfig reward;
  advantage::GaeConfig gae;
  std::vector<std::size_t> critic_hidden{256, 256, 256};
  CriticTarget critic_target = CriticTarget::kAdvantage;
  PpoConfig ppo;
  AdamWConfig policy_optimizer{3e-4, 0.9, 0.999, 1e-4, 1e-8};
  AdamWConfig critic_optimizer{1e-3, 0.9, 0.999, 1e-4, 1e-8};

  void validate() const;
  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

// Everything a training run mutates.
struct Models {
  diffusion::DenoiserNet denoiser;
  advantage::Critic critic;
  AdamWState policy_optimizer;
  AdamWState critic_optimizer;

  static Models initialize(const TrainerConfig& cfg, std::uint64_t seed);
  friend bool operator==(const Models&, const Models&) = default;
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
  friend bool operator==(const Stat&, const Stat&) = default;
};
Stat summarize(const std::vector<double>& xs);

struct RoundMetrics {
  int round = 0;  // 1-based
  Stat composite, stage, subject, vehicle, aesthetic;
  double subject_cosine = 0.0;
  double max_vehicle_cosine = 0.0;
  double vehicle_fire_rate = 0.0;
  std::size_t samples = 0;
  std::size_t degenerate = 0;
  int extraction_attempts = 0;
  int extraction_retries = 0;  // attempts beyond the first, summed over inputs
  double mean_advantage = 0.0;
  // PPO statistics, averaged over minibatches that were evaluated.
  double ppo_objective = 0.0;
  double mean_weight = 0.0;
  double clip_fraction = 0.0;
  std::size_t clamped_ratios = 0;
  std::size_t policy_steps = 0;
  std::size_t skipped_updates = 0;
  double critic_loss = 0.0;
  std::size_t pool_size = 0;
};

struct StagedEpisodeInput {
  std::size_t input_index = 0;
  const staging::RhetoricalInput* input = nullptr;
  staging::ValidatedFactors factors;
  staging::StagedPromptPlan plan;
};

// Orchestrates the multi-stage scene modeling, two-layer rollout, advantage
// propagation and PPO/critic updates of one training round.
class Trainer {
 public:
  Trainer(TrainerConfig config, std::vector<staging::RhetoricalInput> dataset);

  const TrainerConfig& config() const { return config_; }
  const std::vector<staging::RhetoricalInput>& dataset() const { return dataset_; }
  const diffusion::NoiseSchedule& schedule() const { return schedule_; }
  const staging::EmbeddingOracle& oracle() const { return oracle_; }

  // Dataset indices used by round `round` (1-based).
  std::vector<std::size_t> round_inputs(int round, const SeededRng& master) const;

  // Validated factors and staged plan for one input (generate-verify-retry).
  StagedEpisodeInput prepare_input(std::size_t dataset_index, std::size_t position,
                                   SeededRng& rng) const;

  // Rolls out stages [first_stage, C] of one prepared input; rewards are
  // attached to each final sample and values come from the current critic.
  advantage::OuterEpisode rollout_episode(const Models& models, const StagedEpisodeInput& prepared,
                                          int first_stage, const SeededRng& rng) const;

  // Phases 1-2 only: episodes of a round without any update.
  std::vector<advantage::OuterEpisode> collect_episodes(const Models& models, int round,
                                                        const SeededRng& master,
                                                        int* attempts = nullptr) const;

  RoundMetrics train_round(Models& models, int round, const SeededRng& master) const;

 private:
  TrainerConfig config_;
  std::vector<staging::RhetoricalInput> dataset_;
  diffusion::NoiseSchedule schedule_;
  staging::EmbeddingOracle oracle_;
};

}  // namespace tlmdp::ppo
