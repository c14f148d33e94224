#pragma once

#include <span>
#include <vector>

#include "tlmdp/core/rng.hpp"
#include "tlmdp/diffusion/denoiser.hpp"
#include "tlmdp/diffusion/schedule.hpp"

namespace tlmdp::diffusion {

struct DiffusionConfig {
  int steps = 50;
  double guidance = 5.0;
  double eta = 1.0;
  double sigma_min = 0.1;
  double beta_min = 0.0;  // 0 selects default_beta_range(steps)
  double beta_max = 0.0;

  void validate() const;
  std::pair<double, double> beta_range() const;
  NoiseSchedule make_schedule() const;
  friend bool operator==(const DiffusionConfig&, const DiffusionConfig&) = default;
};

// Isotropic Gaussian N(mean, variance * I) over x_{t-1}.
struct GaussianStep {
  std::vector<double> mean;
  double variance = 1.0;
};

struct DdimStep {
  GaussianStep policy;
  std::vector<double> x0_pred;
  // d mean / d eps (the map is a scalar multiple of the identity).
  double eps_coefficient = 0.0;
};

// One reverse DDIM update with noise weight eta, as a Gaussian over x_{t-1}:
//   x0_pred = (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
//   var     = max(sigma_min^2, eta^2 (1 - ab_prev)/(1 - ab_t) (1 - ab_t/ab_prev))
//   mean    = sqrt(ab_prev) x0_pred + sqrt(1 - ab_prev - var) eps
DdimStep ddim_params(const NoiseSchedule& schedule, std::span<const double> x_t, int t,
                     std::span<const double> eps, double eta, double sigma_min);
DdimStep ddim_params_from_alphas(double alpha_bar_t, double alpha_bar_prev,
                                 std::span<const double> x_t, std::span<const double> eps,
                                 double eta, double sigma_min);

std::vector<double> policy_sample(const GaussianStep& step, SeededRng& rng);
double policy_logpdf(const GaussianStep& step, std::span<const double> action);
// d logpdf / d mean = (action - mean) / variance.
std::vector<double> policy_logpdf_mean_grad(const GaussianStep& step,
                                            std::span<const double> action);

// One denoising step s_t = (c, t, x_t) -> a_t = x_{t-1}.
struct StepRecord {
  int t = 0;
  std::vector<double> x_t;
  std::vector<double> action;
  std::vector<double> mean;
  double variance = 0.0;
  double log_prob = 0.0;
  std::vector<double> x0_pred;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

// Records are ordered t = T, T-1, ..., 1; final_sample equals the last action.
struct Trajectory {
  std::vector<double> prompt;
  std::vector<StepRecord> records;
  std::vector<double> final_sample;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// x_T ~ N(0, I), then T policy steps under the current denoiser.
Trajectory rollout(const DenoiserNet& net, std::span<const double> prompt,
                   const NoiseSchedule& schedule, const DiffusionConfig& config, SeededRng& rng);

// Log-likelihood of a stored action under the given denoiser.
struct StepEvaluation {
  DdimStep step;
  double log_prob = 0.0;
};
StepEvaluation evaluate_step(const DenoiserNet& net, std::span<const double> prompt,
                             const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                             std::span<const double> x_t, std::span<const double> action);

// Forward pass of evaluate_step with the network tapes kept for backward.
struct StepForward {
  StepEvaluation eval;
  MlpTape conditional;
  MlpTape unconditional;
};
StepForward forward_step(const DenoiserNet& net, std::span<const double> prompt,
                         const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                         std::span<const double> x_t, std::span<const double> action);
// grads += scale * d log_prob / d theta from a recorded forward pass.
void backward_step(const DenoiserNet& net, const StepForward& forward,
                   const DiffusionConfig& config, std::span<const double> action, double scale,
                   MlpParams& grads);

// grads += scale * d log_prob / d theta for the step above.
void evaluate_step_backward(const DenoiserNet& net, std::span<const double> prompt,
                            const NoiseSchedule& schedule, const DiffusionConfig& config, int t,
                            std::span<const double> x_t, std::span<const double> action,
                            double scale, MlpParams& grads);

}  // namespace tlmdp::diffusion
