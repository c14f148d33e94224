#include "tlmdp/diffusion/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::diffusion {

void DiffusionConfig::validate() const {
  if (steps < 1) throw ConfigError("diffusion.T must be at least 1");
  if (!(guidance >= 0.0)) throw ConfigError("diffusion.guidance must be non-negative");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("diffusion.eta must be in [0, 1]");
  if (!(sigma_min > 0.0)) throw ConfigError("diffusion.sigma_min must be positive");
  const auto [lo, hi] = beta_range();
  if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
    throw ConfigError("diffusion.beta_min/diffusion.beta_max must satisfy 0 < min <= max < 1");
  }
}

std::pair<double, double> DiffusionConfig::beta_range() const {
  if (beta_min == 0.0 && beta_max == 0.0) return default_beta_range(steps);
  return {beta_min, beta_max};
}

NoiseSchedule DiffusionConfig::make_schedule() const {
  const auto [lo, hi] = beta_range();
  return build_schedule(steps, lo, hi);
}

DdimStep ddim_params_from_alphas(double alpha_bar_t, double alpha_bar_prev,
                                 std::span<const double> x_t, std::span<const double> eps,
                                 double eta, double sigma_min) {
  if (x_t.size() != eps.size()) throw ConfigError("ddim: latent and eps lengths differ");
  const double sqrt_ab = std::sqrt(alpha_bar_t);
  const double sqrt_one_minus_ab = std::sqrt(1.0 - alpha_bar_t);
  const double sqrt_ab_prev = std::sqrt(alpha_bar_prev);

  const double ddim_var = eta * eta * ((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t)) *
                          (1.0 - alpha_bar_t / alpha_bar_prev);
  // The direction term uses the unfloored DDIM variance; the floor only keeps
  // the policy density proper (it would otherwise make the t=1 radicand
  // negative by exactly sigma_min^2).
  double radicand = 1.0 - alpha_bar_prev - ddim_var;
  if (radicand < 0.0) {
    if (radicand > -1e-12) {
      radicand = 0.0;
    } else {
      throw NumericalDomainError("ddim: 1 - alpha_bar_prev - sigma^2 = " + std::to_string(radicand) +
                                 " < 0 (alpha_bar_t=" + std::to_string(alpha_bar_t) +
                                 ", alpha_bar_prev=" + std::to_string(alpha_bar_prev) +
                                 ", eta=" + std::to_string(eta) + ")");
    }
  }
  const double direction = std::sqrt(radicand);

  DdimStep out;
  out.policy.variance = std::max(sigma_min * sigma_min, ddim_var);
  out.x0_pred.resize(x_t.size());
  out.policy.mean.resize(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    out.x0_pred[i] = (x_t[i] - sqrt_one_minus_ab * eps[i]) / sqrt_ab;
    out.policy.mean[i] = sqrt_ab_prev * out.x0_pred[i] + direction * eps[i];
  }
  out.eps_coefficient = direction - sqrt_ab_prev * sqrt_one_minus_ab / sqrt_ab;
  return out;
}

DdimStep ddim_params(const NoiseSchedule& schedule, std::span<const double> x_t, int t,
                     std::span<const double> eps, double eta, double sigma_min) {
  if (t < 1 || t > schedule.steps()) {
    throw InputError("ddim: timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(schedule.steps()) + "]");
  }
  return ddim_params_from_alphas(schedule.alpha_bar(t), schedule.alpha_bar(t - 1), x_t, eps, eta,
                                 sigma_min);
}

std::vector<double> policy_sample(const GaussianStep& step, SeededRng& rng) {
  const double sigma = std::sqrt(step.variance);
  std::vector<double> a(step.mean.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = step.mean[i] + sigma * rng.normal();
  return a;
}

double policy_logpdf(const GaussianStep& step, std::span<const double> action) {
  if (action.size() != step.mean.size()) throw ConfigError("logpdf: action dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double r = action[i] - step.mean[i];
    sq += r * r;
  }
  const double d = static_cast<double>(action.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * step.variance) - sq / (2.0 * step.variance);
}

std::vector<double> policy_logpdf_mean_grad(const GaussianStep& step,
                                            std::span<const double> action) {
  std::vector<double> g(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) g[i] = (action[i] - step.mean[i]) / step.variance;
  return g;
}

Trajectory rollout(const DenoiserNet& net, std::span<const double> prompt,
                   const NoiseSchedule& schedule, const DiffusionConfig& config, SeededRng& rng) {
  if (schedule.steps() != config.steps) {
    throw ConfigError("rollout: schedule has " + std::to_string(schedule.steps()) +
                      " steps, config expects " + std::to_string(config.steps));
  }
  Trajectory traj;
  traj.prompt.assign(prompt.begin(), prompt.end());
  std::vector<double> x(net.latent_dim);
  rng.fill_normal(x);
  traj.records.reserve(static_cast<std::size_t>(config.steps));
  for (int t = config.steps; t >= 1; --t) {
    const EpsPrediction eps = predict_eps(net, x, t, config.steps, prompt, config.guidance);
    DdimStep step = ddim_params(schedule, x, t, eps.guided, config.eta, config.sigma_min);
    StepRecord rec;
    rec.t = t;
    rec.x_t = x;
    rec.action = policy_sample(step.policy, rng);
    rec.log_prob = policy_logpdf(step.policy, rec.action);
    rec.mean = std::move(step.policy.mean);
    rec.variance = step.policy.variance;
    rec.x0_pred = std::move(step.x0_pred);
    x = rec.action;
    traj.records.push_back(std::move(rec));
  }
  traj.final_sample = x;
  return traj;
}

StepForward forward_step(const DenoiserNet& net, std::span<const double> prompt,
                         const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                         std::span<const double> x_t, std::span<const double> action) {
  StepForward out;
  out.conditional = mlp_forward_tape(net.net, net.make_input(x_t, t, config.steps, prompt));
  const std::vector<double> null = net.null_embedding();
  out.unconditional = mlp_forward_tape(net.net, net.make_input(x_t, t, config.steps, null));
  const std::vector<double>& cond = out.conditional.output();
  const std::vector<double>& uncond = out.unconditional.output();
  std::vector<double> eps(net.latent_dim);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i] = uncond[i] + config.guidance * (cond[i] - uncond[i]);
  }
  out.eval.step = ddim_params(schedule, x_t, t, eps, config.eta, config.sigma_min);
  out.eval.log_prob = policy_logpdf(out.eval.step.policy, action);
  return out;
}

void backward_step(const DenoiserNet& net, const StepForward& forward,
                   const DiffusionConfig& config, std::span<const double> action, double scale,
                   MlpParams& grads) {
  // The variance does not depend on theta, so d log p / d eps = k (a - mu) / var.
  std::vector<double> upstream = policy_logpdf_mean_grad(forward.eval.step.policy, action);
  for (double& u : upstream) u *= scale * forward.eval.step.eps_coefficient;
  // guided = (1 - g) eps_u + g eps_c
  const double g = config.guidance;
  std::vector<double> up(upstream.size());
  if (g != 0.0) {
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = g * upstream[i];
    mlp_backward_tape(net.net, forward.conditional, up, grads);
  }
  if (g != 1.0) {
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = (1.0 - g) * upstream[i];
    mlp_backward_tape(net.net, forward.unconditional, up, grads);
  }
}

StepEvaluation evaluate_step(const DenoiserNet& net, std::span<const double> prompt,
                             const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                             std::span<const double> x_t, std::span<const double> action) {
  const EpsPrediction eps = predict_eps(net, x_t, t, config.steps, prompt, config.guidance);
  StepEvaluation out;
  out.step = ddim_params(schedule, x_t, t, eps.guided, config.eta, config.sigma_min);
  out.log_prob = policy_logpdf(out.step.policy, action);
  return out;
}

void evaluate_step_backward(const DenoiserNet& net, std::span<const double> prompt,
                            const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                            std::span<const double> x_t, std::span<const double> action,
                            double scale, MlpParams& grads) {
  const StepForward fwd = forward_step(net, prompt, schedule, config, t, x_t, action);
  backward_step(net, fwd, config, action, scale, grads);
}

}  // namespace tlmdp::diffusion
