#include "tlmdp/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/harness/checkpoint.hpp"
#include "tlmdp/staging/dataset.hpp"
#include "tlmdp/staging/stage_plan.hpp"

namespace tlmdp::harness {
namespace fs = std::filesystem;

namespace {

ppo::Trainer make_trainer(const RunConfig& cfg) {
  return ppo::Trainer(cfg.trainer, staging::load_dataset(cfg.dataset_path));
}

void check_architecture(const ppo::Models& models, const ppo::TrainerConfig& cfg) {
  const ppo::Models fresh = ppo::Models::initialize(cfg, 0);
  if (!models.denoiser.net.same_architecture(fresh.denoiser.net) ||
      models.denoiser.latent_dim != fresh.denoiser.latent_dim ||
      models.denoiser.prompt_dim != fresh.denoiser.prompt_dim) {
    throw CheckpointError("checkpoint denoiser does not match run.d / denoiser.hidden");
  }
  if (!models.critic.net.same_architecture(fresh.critic.net) ||
      models.critic.stages != fresh.critic.stages) {
    throw CheckpointError("checkpoint critic does not match run.d / run.C / critic.hidden");
  }
}

nlohmann::json stat_json(const ppo::Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

}  // namespace

std::string RunPaths::checkpoint(int round) const {
  char name[32];
  std::snprintf(name, sizeof name, "round_%06d.ckpt", round);
  return (fs::path(checkpoints) / name).string();
}

RunPaths run_paths(const std::string& output_dir) {
  const fs::path root(output_dir);
  return {root.string(), (root / "metrics.jsonl").string(), (root / "plot_data.txt").string(),
          (root / "config.txt").string(), (root / "checkpoints").string()};
}

TrainResult cmd_train(const RunConfig& cfg, const std::optional<std::string>& resume,
                      std::ostream& log) {
  cfg.validate();
  const ppo::Trainer trainer = make_trainer(cfg);
  const RunPaths paths = run_paths(effective_output_dir(cfg));
  fs::create_directories(paths.checkpoints);

  const SeededRng fresh_master(cfg.seed);
  SeededRng master = fresh_master;
  ppo::Models models;
  int start = 1;
  std::optional<MetricsWriter> writer;
  if (resume) {
    Checkpoint ckpt = checkpoint_load(*resume);
    if (ckpt.rng_key != fresh_master.key()) {
      throw CheckpointError(*resume + ": checkpoint was written by a run with a different seed");
    }
    check_architecture(ckpt.models, cfg.trainer);
    models = std::move(ckpt.models);
    master = SeededRng::from_state(ckpt.rng_key, ckpt.rng_position);
    start = ckpt.round + 1;
    writer = MetricsWriter::resume(paths.metrics, ckpt.round);
    log << "resuming after round " << ckpt.round << " from " << *resume << "\n";
  } else {
    models = ppo::Models::initialize(cfg.trainer, cfg.seed);
    writer = MetricsWriter::create(paths.metrics, cfg.seed, cfg.rounds);
    std::ofstream(paths.config_copy) << serialize_config(cfg);
  }

  TrainResult result;
  result.first_round = start;
  result.metrics_path = paths.metrics;
  auto save = [&](int round) {
    Checkpoint ckpt;
    ckpt.round = round;
    ckpt.rng_key = master.key();
    ckpt.rng_position = master.position();
    ckpt.models = models;
    const std::string path = paths.checkpoint(round);
    checkpoint_save(path, ckpt);
    result.last_checkpoint = path;
  };

  for (int round = start; round <= cfg.rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    MetricsRecord record;
    try {
      record.round = trainer.train_round(models, round, master);
    } catch (const Error& e) {
      throw Error("round " + std::to_string(round) + ": " + e.what());
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    writer->write(record);
    ++result.rounds_completed;
    log << "round " << round << " composite " << record.round.composite.mean << " fire "
        << record.round.vehicle_fire_rate << " subject_cos " << record.round.subject_cosine
        << "\n";
    if (cfg.checkpoint_every > 0 && round % cfg.checkpoint_every == 0) save(round);
  }
  const int last = std::max(start - 1, cfg.rounds);
  if (result.last_checkpoint != paths.checkpoint(last)) save(last);

  if (cfg.plot_data) {
    const MetricsFile file = read_metrics(paths.metrics);
    std::ofstream out(paths.plot_data);
    write_plot_data(out, file.records, cfg.ema_alpha);
  }
  return result;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"checkpoint_round", r.checkpoint_round},
          {"samples", r.samples},
          {"degenerate", r.degenerate},
          {"composite", stat_json(r.composite)},
          {"stage", stat_json(r.stage)},
          {"subject", stat_json(r.subject)},
          {"vehicle", stat_json(r.vehicle)},
          {"aesthetic", stat_json(r.aesthetic)},
          {"subject_cosine", r.subject_cosine},
          {"max_vehicle_cosine", r.max_vehicle_cosine},
          {"vehicle_fire_rate", r.vehicle_fire_rate}};
}

EvalReport evaluate_models(const ppo::Trainer& trainer, const ppo::Models& models,
                           std::uint64_t seed, int samples_per_input) {
  if (samples_per_input < 1) throw ConfigError("eval.samples must be at least 1");
  const ppo::TrainerConfig& cfg = trainer.config();
  const SeededRng root = SeededRng(seed).split("eval");
  const int final_stage = cfg.stages;
  std::vector<double> composite, stage, subject, vehicle, aesthetic;
  EvalReport report;
  double subject_cos = 0.0, vehicle_cos = 0.0, fired = 0.0;
  for (std::size_t i = 0; i < trainer.dataset().size(); ++i) {
    SeededRng extract_rng = root.split("extract", i);
    const ppo::StagedEpisodeInput prepared = trainer.prepare_input(i, i, extract_rng);
    const reward::RewardContext ctx =
        reward::RewardContext::build(prepared.factors.factors, prepared.plan, trainer.oracle());
    const std::vector<double> prompt = staging::embed_prompt(
        prepared.plan, final_stage, reward::stage_weights(final_stage, cfg.reward.decay));
    for (int s = 0; s < samples_per_input; ++s) {
      SeededRng rng = root.split("sample", i * static_cast<std::size_t>(samples_per_input) +
                                              static_cast<std::size_t>(s));
      const diffusion::Trajectory traj =
          diffusion::rollout(models.denoiser, prompt, trainer.schedule(), cfg.diffusion, rng);
      const reward::RewardBreakdown r =
          reward::composite_reward(traj.final_sample, final_stage, ctx, cfg.reward);
      composite.push_back(r.composite);
      stage.push_back(r.stage);
      subject.push_back(r.subject);
      vehicle.push_back(r.vehicle);
      aesthetic.push_back(r.aesthetic);
      subject_cos += r.subject_cosine;
      vehicle_cos += r.max_vehicle_cosine;
      fired += r.vehicle < 0.0 ? 1.0 : 0.0;
      report.degenerate += r.degenerate;
    }
  }
  report.samples = composite.size();
  const double n = static_cast<double>(report.samples);
  report.composite = ppo::summarize(composite);
  report.stage = ppo::summarize(stage);
  report.subject = ppo::summarize(subject);
  report.vehicle = ppo::summarize(vehicle);
  report.aesthetic = ppo::summarize(aesthetic);
  report.subject_cosine = subject_cos / n;
  report.max_vehicle_cosine = vehicle_cos / n;
  report.vehicle_fire_rate = fired / n;
  return report;
}

EvalReport cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
  cfg.validate();
  const Checkpoint ckpt = checkpoint_load(checkpoint_path);
  check_architecture(ckpt.models, cfg.trainer);
  const ppo::Trainer trainer = make_trainer(cfg);
  EvalReport report = evaluate_models(trainer, ckpt.models, cfg.seed, cfg.eval_samples);
  report.checkpoint_round = ckpt.round;
  return report;
}

nlohmann::json to_json(const SampleRecord& r) {
  return {{"input_id", r.input_id},
          {"stage", r.stage},
          {"sample", r.sample},
          {"reward",
           {{"composite", r.reward.composite},
            {"stage", r.reward.stage},
            {"subject", r.reward.subject},
            {"vehicle", r.reward.vehicle},
            {"aesthetic", r.reward.aesthetic},
            {"subject_cosine", r.reward.subject_cosine},
            {"max_vehicle_cosine", r.reward.max_vehicle_cosine},
            {"degenerate", r.reward.degenerate}}}};
}

std::vector<SampleRecord> cmd_sample(const RunConfig& cfg, const std::string& checkpoint_path,
                                     int stage) {
  cfg.validate();
  if (stage < 1 || stage > cfg.trainer.stages) {
    throw ConfigError("--stage must be in [1, " + std::to_string(cfg.trainer.stages) + "], got " +
                      std::to_string(stage));
  }
  const Checkpoint ckpt = checkpoint_load(checkpoint_path);
  check_architecture(ckpt.models, cfg.trainer);
  const ppo::Trainer trainer = make_trainer(cfg);
  const ppo::TrainerConfig& tc = trainer.config();
  const SeededRng root = SeededRng(cfg.seed).split("sample");
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < trainer.dataset().size(); ++i) {
    SeededRng extract_rng = root.split("extract", i);
    const ppo::StagedEpisodeInput prepared = trainer.prepare_input(i, i, extract_rng);
    const reward::RewardContext ctx =
        reward::RewardContext::build(prepared.factors.factors, prepared.plan, trainer.oracle());
    const std::vector<double> prompt =
        staging::embed_prompt(prepared.plan, stage, reward::stage_weights(stage, tc.reward.decay));
    SeededRng rng = root.split("rollout", i);
    const diffusion::Trajectory traj =
        diffusion::rollout(ckpt.models.denoiser, prompt, trainer.schedule(), tc.diffusion, rng);
    SampleRecord rec;
    rec.input_id = prepared.input->id;
    rec.stage = stage;
    rec.sample = traj.final_sample;
    rec.reward = reward::composite_reward(traj.final_sample, stage, ctx, tc.reward);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace tlmdp::harness
