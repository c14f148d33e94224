#include "tlmdp/ppo/trainer.hpp"

#include <cmath>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/staging/stage_plan.hpp"

namespace tlmdp::ppo {

void TrainerConfig::validate() const {
  if (inputs_per_round < 1) throw ConfigError("run.N must be at least 1");
  if (stages < 1) throw ConfigError("run.C must be at least 1");
  if (latent_dim < 1) throw ConfigError("run.d must be at least 1");
  if (denoiser_hidden.empty()) throw ConfigError("denoiser.hidden must list at least one width");
  if (critic_hidden.empty()) throw ConfigError("critic.hidden must list at least one width");
  diffusion.validate();
  verifier.validate();
  reward.validate();
  gae.validate();
  ppo.validate();
  policy_optimizer.validate("policy_opt");
  critic_optimizer.validate("critic_opt");
}

Models Models::initialize(const TrainerConfig& cfg, std::uint64_t seed) {
  SeededRng root(seed);
  SeededRng denoiser_rng = root.split("init.denoiser");
  SeededRng critic_rng = root.split("init.critic");
  Models m;
  m.denoiser = diffusion::DenoiserNet::create(cfg.latent_dim, cfg.latent_dim, cfg.denoiser_hidden,
                                              denoiser_rng);
  m.critic = advantage::Critic::create(cfg.latent_dim, cfg.stages, cfg.critic_hidden, critic_rng);
  m.policy_optimizer = AdamWState::for_params(m.denoiser.net, cfg.policy_optimizer);
  m.critic_optimizer = AdamWState::for_params(m.critic.net, cfg.critic_optimizer);
  return m;
}

Stat summarize(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x / n;
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean) / n;
  s.stddev = std::sqrt(var);
  return s;
}

Trainer::Trainer(TrainerConfig config, std::vector<staging::RhetoricalInput> dataset)
    : config_(std::move(config)),
      dataset_(std::move(dataset)),
      oracle_(config_.latent_dim, config_.embedding_seed) {
  config_.validate();
  if (dataset_.empty()) throw ConfigError("dataset is empty");
  if (config_.inputs_per_round > dataset_.size()) {
    throw ConfigError("run.N = " + std::to_string(config_.inputs_per_round) +
                      " exceeds dataset size " + std::to_string(dataset_.size()));
  }
  schedule_ = config_.diffusion.make_schedule();
}

std::vector<std::size_t> Trainer::round_inputs(int round, const SeededRng& master) const {
  const std::size_t m = dataset_.size();
  const std::size_t n = config_.inputs_per_round;
  std::vector<std::size_t> out;
  std::size_t cached_epoch = SIZE_MAX;
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = static_cast<std::size_t>(round - 1) * n + k;
    const std::size_t epoch = pos / m;
    if (epoch != cached_epoch) {
      if (config_.cycle == DatasetCycle::kShuffle) {
        SeededRng rng = master.split("dataset.cycle", epoch);
        order = random_permutation(m, rng);
      } else {
        order.resize(m);
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
      }
      cached_epoch = epoch;
    }
    out.push_back(order[pos % m]);
  }
  return out;
}

StagedEpisodeInput Trainer::prepare_input(std::size_t dataset_index, std::size_t position,
                                          SeededRng& rng) const {
  StagedEpisodeInput prepared;
  prepared.input_index = position;
  prepared.input = &dataset_.at(dataset_index);
  prepared.factors = staging::generate_validated_factors(*prepared.input, config_.verifier, rng);
  prepared.plan = staging::build_stage_plan(prepared.factors.factors, config_.stages, oracle_);
  return prepared;
}

advantage::OuterEpisode Trainer::rollout_episode(const Models& models,
                                                 const StagedEpisodeInput& prepared,
                                                 int first_stage, const SeededRng& rng) const {
  const reward::RewardContext ctx =
      reward::RewardContext::build(prepared.factors.factors, prepared.plan, oracle_);
  advantage::OuterEpisode episode;
  episode.input_id = prepared.input->id;
  episode.input_index = prepared.input_index;
  for (int j = first_stage; j <= config_.stages; ++j) {
    advantage::StageOutcome out;
    out.stage = j;
    const std::vector<double> weights = reward::stage_weights(j, config_.reward.decay);
    out.prompt = staging::embed_prompt(prepared.plan, j, weights);
    SeededRng stage_rng = rng.split("stage", static_cast<std::uint64_t>(j));
    out.trajectory = diffusion::rollout(models.denoiser, out.prompt, schedule_, config_.diffusion,
                                        stage_rng);
    out.reward = reward::composite_reward(out.trajectory.final_sample, j, ctx, config_.reward);
    out.value = advantage::critic_value(models.critic, out.trajectory.final_sample, j);
    episode.stages.push_back(std::move(out));
  }
  return episode;
}

std::vector<advantage::OuterEpisode> Trainer::collect_episodes(const Models& models, int round,
                                                               const SeededRng& master,
                                                               int* attempts) const {
  const SeededRng round_rng = master.split("round", static_cast<std::uint64_t>(round));
  const std::vector<std::size_t> picks = round_inputs(round, master);
  std::vector<advantage::OuterEpisode> episodes;
  int total_attempts = 0;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    SeededRng extract_rng = round_rng.split("extract", k);
    const StagedEpisodeInput prepared = prepare_input(picks[k], k, extract_rng);
    total_attempts += prepared.factors.attempts;
    episodes.push_back(rollout_episode(models, prepared, 1, round_rng.split("episode", k)));
  }
  if (attempts) *attempts = total_attempts;
  return episodes;
}

RoundMetrics Trainer::train_round(Models& models, int round, const SeededRng& master) const {
  RoundMetrics metrics;
  metrics.round = round;

  // Scene modeling and two-layer rollout under the current (old) policy.
  int attempts = 0;
  const std::vector<advantage::OuterEpisode> episodes =
      collect_episodes(models, round, master, &attempts);
  metrics.extraction_attempts = attempts;
  metrics.extraction_retries = attempts - static_cast<int>(episodes.size());

  std::vector<double> composite, stage, subject, vehicle, aesthetic;
  double subject_cos = 0.0, vehicle_cos = 0.0, fired = 0.0;
  for (const auto& ep : episodes) {
    for (const auto& s : ep.stages) {
      composite.push_back(s.reward.composite);
      stage.push_back(s.reward.stage);
      subject.push_back(s.reward.subject);
      vehicle.push_back(s.reward.vehicle);
      aesthetic.push_back(s.reward.aesthetic);
      subject_cos += s.reward.subject_cosine;
      vehicle_cos += s.reward.max_vehicle_cosine;
      fired += s.reward.vehicle < 0.0 ? 1.0 : 0.0;
      metrics.degenerate += s.reward.degenerate;
    }
  }
  metrics.samples = composite.size();
  const double ns = static_cast<double>(metrics.samples);
  metrics.composite = summarize(composite);
  metrics.stage = summarize(stage);
  metrics.subject = summarize(subject);
  metrics.vehicle = summarize(vehicle);
  metrics.aesthetic = summarize(aesthetic);
  metrics.subject_cosine = subject_cos / ns;
  metrics.max_vehicle_cosine = vehicle_cos / ns;
  metrics.vehicle_fire_rate = fired / ns;

  // Outer GAE, inner discounting, pooling.
  std::vector<advantage::AdvantageEstimate> advantages;
  for (const auto& ep : episodes) advantages.push_back(advantage::estimate_advantages(ep, config_.gae));
  const TransitionPool pool = collect_pool(episodes, advantages);
  metrics.pool_size = pool.size();
  double adv_sum = 0.0;
  for (const auto& tr : pool.transitions) adv_sum += tr.advantage;
  metrics.mean_advantage = adv_sum / static_cast<double>(pool.size());

  // PPO and critic updates over shuffled minibatches.
  const SeededRng round_rng = master.split("round", static_cast<std::uint64_t>(round));
  const PpoConfig& ppo = config_.ppo;
  const double accum_scale = 1.0 / ppo.grad_accumulation;
  MlpParams policy_grads = MlpParams::zeros_like(models.denoiser.net);
  MlpParams critic_grads = MlpParams::zeros_like(models.critic.net);
  int pending = 0;
  std::size_t evaluated = 0;
  double critic_loss_sum = 0.0;

  auto flush = [&]() {
    const StepReport p = optimizer_step(models.denoiser.net, policy_grads, models.policy_optimizer);
    if (p.applied) ++metrics.policy_steps; else ++metrics.skipped_updates;
    optimizer_step(models.critic.net, critic_grads, models.critic_optimizer);
    policy_grads = MlpParams::zeros_like(models.denoiser.net);
    critic_grads = MlpParams::zeros_like(models.critic.net);
    pending = 0;
  };

  for (int epoch = 0; epoch < ppo.epochs; ++epoch) {
    SeededRng shuffle_rng = round_rng.split("shuffle", static_cast<std::uint64_t>(epoch));
    const auto batches = shuffle_and_batch(pool, shuffle_rng, ppo.minibatch);
    for (const auto& batch : batches) {
      std::vector<const Transition*> members;
      members.reserve(batch.size());
      for (std::size_t idx : batch) members.push_back(&pool.transitions[idx]);

      const UpdateStats stats = accumulate_policy_gradient(
          models.denoiser, members, ppo, schedule_, config_.diffusion, accum_scale, policy_grads);
      ++evaluated;
      metrics.ppo_objective += stats.objective;
      metrics.mean_weight += stats.mean_weight;
      metrics.clip_fraction += stats.clip_fraction;
      metrics.clamped_ratios += stats.clamped;
      if (!stats.applied) ++metrics.skipped_updates;

      const auto examples = critic_examples(members, config_.critic_target);
      advantage::CriticLoss closs = advantage::critic_loss_and_grads(models.critic, examples);
      critic_loss_sum += closs.loss;
      critic_grads.add_scaled(closs.grads, accum_scale);

      if (++pending == ppo.grad_accumulation) flush();
    }
  }
  if (pending > 0) flush();

  if (evaluated > 0) {
    const double ne = static_cast<double>(evaluated);
    metrics.ppo_objective /= ne;
    metrics.mean_weight /= ne;
    metrics.clip_fraction /= ne;
    metrics.critic_loss = critic_loss_sum / ne;
  }
  return metrics;
}

}  // namespace tlmdp::ppo
