#include <algorithm>
#include <cmath>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/harness/commands.hpp"
#include "tlmdp/ppo/surrogate.hpp"
#include "tlmdp/staging/embedding.hpp"

namespace tlmdp::harness {
namespace {

constexpr double kInitStd = 0.2;
constexpr int kStages = 2;
// Distance kept between every importance weight and the clip bounds, and
// between every log ratio and the clamp, so finite differences stay on one
// branch of the surrogate.
constexpr double kWeightMargin = 0.05;
constexpr double kLogRatioMargin = 2.0;
constexpr double kPerturbation = 0.01;
constexpr int kMaxResamples = 50;

std::vector<std::size_t> cap(const std::vector<std::size_t>& widths, std::size_t limit) {
  std::vector<std::size_t> out;
  for (std::size_t w : widths) out.push_back(std::min(w, limit));
  return out;
}

struct PolicyInstance {
  diffusion::DenoiserNet net;
  diffusion::NoiseSchedule schedule;
  diffusion::DiffusionConfig config;
  std::vector<ppo::Transition> transitions;
  std::vector<double> advantages;
};

PolicyInstance make_policy_instance(const RunConfig& cfg, const GradcheckOptions& opt,
                                    SeededRng rng) {
  PolicyInstance inst;
  inst.config = cfg.trainer.diffusion;
  inst.config.steps = opt.steps;
  if (!(cfg.trainer.diffusion.beta_min == 0.0 && cfg.trainer.diffusion.beta_max == 0.0)) {
    inst.config.beta_min = cfg.trainer.diffusion.beta_min;
    inst.config.beta_max = cfg.trainer.diffusion.beta_max;
  }
  inst.config.validate();
  inst.schedule = inst.config.make_schedule();
  SeededRng theta_rng = rng.split("theta");
  inst.net = diffusion::DenoiserNet::create(opt.latent_dim, opt.latent_dim,
                                            cap(cfg.trainer.denoiser_hidden, opt.max_width),
                                            theta_rng, kInitStd);
  SeededRng data_rng = rng.split("data");
  for (int j = 1; j <= kStages; ++j) {
    std::vector<double> prompt(opt.latent_dim);
    data_rng.fill_normal(prompt);
    auto shared = std::make_shared<const std::vector<double>>(staging::normalized(prompt));
    const diffusion::Trajectory traj =
        diffusion::rollout(inst.net, *shared, inst.schedule, inst.config, data_rng);
    for (const diffusion::StepRecord& rec : traj.records) {
      ppo::Transition tr;
      tr.stage = j;
      tr.t = rec.t;
      tr.prompt = shared;
      tr.x_t = rec.x_t;
      tr.action = rec.action;
      tr.old_log_prob = rec.log_prob;
      tr.old_variance = rec.variance;
      tr.x0_pred = rec.x0_pred;
      tr.advantage = data_rng.normal();
      inst.advantages.push_back(tr.advantage);
      inst.transitions.push_back(std::move(tr));
    }
  }
  return inst;
}

std::vector<const ppo::Transition*> pointers(const PolicyInstance& inst) {
  std::vector<const ppo::Transition*> out;
  for (const auto& tr : inst.transitions) out.push_back(&tr);
  return out;
}

// Starting step per coordinate such that a probe cannot move any log ratio
// by more than a quarter of its distance to the nearest clip or clamp kink.
// Both the linear term and the curvature |dmu/dtheta_i|^2 / sigma^2 of the
// Gaussian log-density are bounded.
std::vector<double> safe_steps(const PolicyInstance& inst, const diffusion::DenoiserNet& net,
                               double clip) {
  constexpr double kMaxStep = 1e-3;
  const std::size_t n = net.net.parameter_count();
  std::vector<double> steps(n, kMaxStep);
  const double kinks[] = {std::log1p(-clip), std::log1p(clip), -ppo::kLogRatioClamp,
                          ppo::kLogRatioClamp};
  for (const auto& tr : inst.transitions) {
    const diffusion::StepForward fwd =
        diffusion::forward_step(net, *tr.prompt, inst.schedule, inst.config, tr.t, tr.x_t, tr.action);
    const double diff = fwd.eval.log_prob - tr.old_log_prob;
    double distance = INFINITY;
    for (double k : kinks) distance = std::min(distance, std::abs(diff - k));
    MlpParams g = MlpParams::zeros_like(net.net);
    diffusion::backward_step(net, fwd, inst.config, tr.action, 1.0, g);
    const std::vector<double> flat = g.flatten();
    for (std::size_t i = 0; i < n; ++i) {
      if (flat[i] != 0.0) steps[i] = std::min(steps[i], 0.25 * distance / std::abs(flat[i]));
    }
    std::vector<double> mean_sq(n, 0.0);
    for (std::size_t m = 0; m < net.latent_dim; ++m) {
      std::vector<double> unit(net.latent_dim, 0.0);
      unit[m] = fwd.eval.step.eps_coefficient;
      MlpParams jac = MlpParams::zeros_like(net.net);
      diffusion::predict_eps_backward(net, tr.x_t, tr.t, inst.config.steps, *tr.prompt,
                                      inst.config.guidance, unit, jac);
      const std::vector<double> row = jac.flatten();
      for (std::size_t i = 0; i < n; ++i) mean_sq[i] += row[i] * row[i];
    }
    const double variance = fwd.eval.step.policy.variance;
    for (std::size_t i = 0; i < n; ++i) {
      if (mean_sq[i] > 0.0) {
        steps[i] = std::min(steps[i], std::sqrt(0.5 * distance * variance / mean_sq[i]));
      }
    }
  }
  return steps;
}

// PPO loss (negated mean clipped surrogate) and its gradient at `net`.
GradCheckReport check_policy(const PolicyInstance& inst, const diffusion::DenoiserNet& net,
                             double clip, bool corrupt, std::uint64_t seed) {
  const auto batch = pointers(inst);
  ppo::SurrogateEvaluation eval =
      ppo::surrogate_and_grads(net, batch, inst.advantages, inst.schedule, inst.config, clip);
  std::vector<double> analytic = eval.grads.flatten();
  for (double& g : analytic) g = -g;
  if (corrupt) {
    for (std::size_t i = 0; i < analytic.size(); ++i) analytic[i] *= 1.0 + 0.05 * (i % 2 == 0);
  }
  diffusion::DenoiserNet probe = net;
  const ScalarFunction loss = [&](std::span<const double> flat) {
    probe.net.assign(flat);
    return -ppo::surrogate_and_grads(probe, batch, inst.advantages, inst.schedule, inst.config,
                                     clip)
                .objective;
  };
  GradCheckOptions options;
  options.seed = seed;
  options.method = FiniteDifference::kRidders;
  options.coordinate_steps = safe_steps(inst, net, clip);
  return gradient_check(loss, net.net.flatten(), analytic, options);
}

bool away_from_kinks(const PolicyInstance& inst, const diffusion::DenoiserNet& net, double clip) {
  for (const auto& tr : inst.transitions) {
    const double logp = ppo::recompute_step(net, tr, inst.schedule, inst.config).log_prob;
    const double diff = logp - tr.old_log_prob;
    if (std::abs(std::abs(diff) - ppo::kLogRatioClamp) < kLogRatioMargin) return false;
    if (std::abs(diff) >= ppo::kLogRatioClamp) continue;
    const double w = std::exp(diff);
    if (std::abs(w - (1.0 - clip)) < kWeightMargin || std::abs(w - (1.0 + clip)) < kWeightMargin) {
      return false;
    }
  }
  return true;
}

GradCheckReport check_critic(const RunConfig& cfg, const GradcheckOptions& opt, SeededRng rng,
                             std::uint64_t seed) {
  SeededRng phi_rng = rng.split("phi");
  const advantage::Critic critic = advantage::Critic::create(
      opt.latent_dim, kStages, cap(cfg.trainer.critic_hidden, opt.max_width), phi_rng, kInitStd);
  SeededRng data_rng = rng.split("critic.data");
  std::vector<advantage::CriticExample> batch;
  for (int k = 0; k < kStages * opt.steps; ++k) {
    advantage::CriticExample ex;
    ex.sample.resize(opt.latent_dim);
    data_rng.fill_normal(ex.sample);
    ex.stage = 1 + static_cast<int>(data_rng.uniform_index(kStages));
    ex.target = data_rng.normal();
    batch.push_back(std::move(ex));
  }
  const std::vector<double> analytic = advantage::critic_loss_and_grads(critic, batch).grads.flatten();
  advantage::Critic probe = critic;
  const ScalarFunction loss = [&](std::span<const double> flat) {
    probe.net.assign(flat);
    return advantage::critic_loss_and_grads(probe, batch).loss;
  };
  GradCheckOptions options;
  options.seed = seed;
  return gradient_check(loss, critic.net.flatten(), analytic, options);
}

}  // namespace

nlohmann::json to_json(const GradcheckSummary& s) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : s.cases) {
    cases.push_back({{"name", c.name},
                     {"instance", c.instance},
                     {"max_relative_error", c.report.max_relative_error},
                     {"worst_index", c.report.worst_index},
                     {"worst_analytic", c.report.worst_analytic},
                     {"worst_numeric", c.report.worst_numeric},
                     {"coordinates", c.report.coordinates_checked},
                     {"passed", c.report.passed}});
  }
  return {{"tolerance", s.tolerance}, {"passed", s.passed}, {"cases", cases}};
}

GradcheckSummary cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opt) {
  if (opt.instances < 1) throw ConfigError("gradcheck: at least one instance is required");
  GradcheckSummary summary;
  summary.tolerance = GradCheckOptions{}.tolerance;
  const SeededRng root = SeededRng(cfg.seed).split("gradcheck");
  const double clip = cfg.trainer.ppo.clip;
  for (int i = 0; i < opt.instances; ++i) {
    const SeededRng rng = root.split("instance", static_cast<std::uint64_t>(i));
    const std::uint64_t seed = rng.split("coordinates").next_u64();
    const PolicyInstance inst = make_policy_instance(cfg, opt, rng);

    summary.cases.push_back({"policy_surrogate/frozen", i,
                             check_policy(inst, inst.net, clip, opt.corrupt_backward, seed)});

    SeededRng perturb_rng = rng.split("perturb");
    diffusion::DenoiserNet moved = inst.net;
    bool found = false;
    for (int attempt = 0; attempt < kMaxResamples && !found; ++attempt) {
      std::vector<double> flat = inst.net.net.flatten();
      for (double& p : flat) p += kPerturbation * perturb_rng.normal();
      moved.net.assign(flat);
      found = away_from_kinks(inst, moved, clip);
    }
    if (!found) {
      throw Error("gradcheck: no perturbed point away from the clip and clamp kinks after " +
                  std::to_string(kMaxResamples) + " draws");
    }
    summary.cases.push_back({"policy_surrogate/perturbed", i,
                             check_policy(inst, moved, clip, opt.corrupt_backward, seed)});

    summary.cases.push_back({"critic_loss", i, check_critic(cfg, opt, rng, seed)});
  }
  summary.passed = std::all_of(summary.cases.begin(), summary.cases.end(),
                               [](const GradcheckCase& c) { return c.report.passed; });
  return summary;
}

}  // namespace tlmdp::harness
