#include "tlmdp/ppo/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::ppo {

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo.clip must be in (0, 1)");
  if (minibatch < 1) throw ConfigError("ppo.minibatch must be at least 1");
  if (epochs < 0) throw ConfigError("ppo.epochs must be non-negative");
  if (grad_accumulation < 1) throw ConfigError("ppo.grad_accumulation must be at least 1");
}

ImportanceWeight importance_weight(double logp_new, double logp_old) {
  const double diff = logp_new - logp_old;
  ImportanceWeight out;
  if (diff > kLogRatioClamp || diff < -kLogRatioClamp || std::isnan(diff)) {
    out.clamped = true;
  }
  out.weight = std::exp(std::clamp(diff, -kLogRatioClamp, kLogRatioClamp));
  return out;
}

SurrogateTerm ppo_objective(double weight, double advantage, double clip) {
  const double unclipped = weight * advantage;
  const double clipped = std::clamp(weight, 1.0 - clip, 1.0 + clip) * advantage;
  SurrogateTerm out;
  if (unclipped <= clipped) {
    out.objective = unclipped;
    out.weight_gradient = advantage;
  } else {
    out.objective = clipped;
    out.weight_gradient = 0.0;
    out.clipped = true;
  }
  return out;
}

diffusion::StepEvaluation recompute_step(const diffusion::DenoiserNet& net, const Transition& tr,
                                         const diffusion::NoiseSchedule& schedule,
                                         const diffusion::DiffusionConfig& config) {
  if (!tr.prompt) throw InputError("recompute_step: transition has no prompt embedding");
  return diffusion::evaluate_step(net, *tr.prompt, schedule, config, tr.t, tr.x_t, tr.action);
}

SurrogateEvaluation surrogate_and_grads(const diffusion::DenoiserNet& net,
                                        std::span<const Transition* const> batch,
                                        std::span<const double> advantages,
                                        const diffusion::NoiseSchedule& schedule,
                                        const diffusion::DiffusionConfig& config, double clip) {
  if (batch.empty()) throw InputError("surrogate: empty batch");
  if (advantages.size() != batch.size()) throw InputError("surrogate: advantage count mismatch");
  SurrogateEvaluation out{0.0, MlpParams::zeros_like(net.net), 0.0, 0, 0};
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    if (!tr.prompt) throw InputError("surrogate: transition has no prompt embedding");
    const diffusion::StepForward fwd =
        diffusion::forward_step(net, *tr.prompt, schedule, config, tr.t, tr.x_t, tr.action);
    const diffusion::StepEvaluation& eval = fwd.eval;
    const ImportanceWeight w = importance_weight(eval.log_prob, tr.old_log_prob);
    const SurrogateTerm term = ppo_objective(w.weight, advantages[i], clip);
    out.objective += term.objective / n;
    out.mean_weight += w.weight / n;
    out.clipped += term.clipped;
    out.clamped += w.clamped;
    // d/dtheta of w = w * d log p / dtheta; constant while clamped.
    const double coefficient = w.clamped ? 0.0 : term.weight_gradient * w.weight / n;
    if (coefficient != 0.0) {
      diffusion::backward_step(net, fwd, config, tr.action, coefficient, out.grads);
    }
  }
  return out;
}

UpdateStats accumulate_policy_gradient(const diffusion::DenoiserNet& net,
                                       std::span<const Transition* const> minibatch,
                                       const PpoConfig& ppo,
                                       const diffusion::NoiseSchedule& schedule,
                                       const diffusion::DiffusionConfig& config, double scale,
                                       MlpParams& grad_buffer) {
  if (minibatch.empty()) throw InputError("policy_update: empty minibatch");
  std::vector<double> adv;
  adv.reserve(minibatch.size());
  for (const Transition* tr : minibatch) adv.push_back(tr->advantage);
  if (ppo.normalize_advantages && adv.size() > 1) {
    double mean = 0.0;
    for (double a : adv) mean += a / static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean) / static_cast<double>(adv.size());
    const double sd = std::sqrt(var) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;
  }
  const SurrogateEvaluation eval =
      surrogate_and_grads(net, minibatch, adv, schedule, config, ppo.clip);

  UpdateStats stats;
  stats.objective = eval.objective;
  stats.mean_weight = eval.mean_weight;
  stats.clip_fraction = static_cast<double>(eval.clipped) / static_cast<double>(minibatch.size());
  stats.clamped = eval.clamped;
  stats.transitions = minibatch.size();
  if (!std::isfinite(eval.objective) || !eval.grads.all_finite()) {
    stats.diagnostic = "non-finite surrogate or gradient; minibatch skipped";
    return stats;
  }
  // Loss is the negated objective.
  grad_buffer.add_scaled(eval.grads, -scale);
  stats.applied = true;
  return stats;
}

UpdateStats policy_update(diffusion::DenoiserNet& net, std::span<const Transition* const> minibatch,
                          const PpoConfig& ppo, AdamWState& optimizer,
                          const diffusion::NoiseSchedule& schedule,
                          const diffusion::DiffusionConfig& config) {
  MlpParams grads = MlpParams::zeros_like(net.net);
  UpdateStats stats = accumulate_policy_gradient(net, minibatch, ppo, schedule, config, 1.0, grads);
  if (!stats.applied) return stats;
  const StepReport report = optimizer_step(net.net, grads, optimizer);
  stats.applied = report.applied;
  if (!report.applied) stats.diagnostic = report.diagnostic;
  return stats;
}

std::string to_string(CriticTarget target) {
  return target == CriticTarget::kAdvantage ? "advantage" : "lambda_return";
}

CriticTarget critic_target_from_string(const std::string& name) {
  if (name == "advantage") return CriticTarget::kAdvantage;
  if (name == "lambda_return") return CriticTarget::kLambdaReturn;
  throw ConfigError("critic.target must be 'advantage' or 'lambda_return', got '" + name + "'");
}

double critic_target(const Transition& tr, CriticTarget mode) {
  return mode == CriticTarget::kAdvantage ? tr.advantage : tr.stage_advantage + tr.stage_value;
}

std::vector<advantage::CriticExample> critic_examples(std::span<const Transition* const> minibatch,
                                                      CriticTarget mode) {
  std::vector<advantage::CriticExample> out;
  out.reserve(minibatch.size());
  for (const Transition* tr : minibatch) {
    out.push_back({tr->x0_pred, tr->stage, critic_target(*tr, mode)});
  }
  return out;
}

}  // namespace tlmdp::ppo
