#pragma once

#include <span>
#include <string>
#include <vector>

#include "tlmdp/advantage/critic.hpp"
#include "tlmdp/core/adamw.hpp"
#include "tlmdp/diffusion/policy.hpp"
#include "tlmdp/ppo/pool.hpp"

namespace tlmdp::ppo {

struct PpoConfig {
  double clip = 0.2;
  std::size_t minibatch = 3;
  int epochs = 4;
  bool normalize_advantages = false;
  int grad_accumulation = 1;

  void validate() const;
  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

inline constexpr double kLogRatioClamp = 50.0;

struct ImportanceWeight {
  double weight = 1.0;
  bool clamped = false;  // log-ratio hit ±kLogRatioClamp
};

// exp(logp_new - logp_old) with the log-ratio clamped to ±50.
ImportanceWeight importance_weight(double logp_new, double logp_old);

struct SurrogateTerm {
  double objective = 0.0;
  // d objective / d w: the advantage when the unclipped branch is active,
  // zero when the clipped branch binds.
  double weight_gradient = 0.0;
  bool clipped = false;
};

// min(w A, clip(w, 1 - eps, 1 + eps) A).
SurrogateTerm ppo_objective(double weight, double advantage, double clip);

// Current-policy likelihood of a pooled transition's stored action.
diffusion::StepEvaluation recompute_step(const diffusion::DenoiserNet& net, const Transition& tr,
                                         const diffusion::NoiseSchedule& schedule,
                                         const diffusion::DiffusionConfig& config);

struct SurrogateEvaluation {
  double objective = 0.0;  // mean over the batch
  MlpParams grads;         // d objective / d theta
  double mean_weight = 0.0;
  std::size_t clipped = 0;
  std::size_t clamped = 0;
};

// Mean clipped surrogate over `batch` and its exact gradient. The advantages
// are taken from `advantages` (same order as batch).
SurrogateEvaluation surrogate_and_grads(const diffusion::DenoiserNet& net,
                                        std::span<const Transition* const> batch,
                                        std::span<const double> advantages,
                                        const diffusion::NoiseSchedule& schedule,
                                        const diffusion::DiffusionConfig& config, double clip);

struct UpdateStats {
  double objective = 0.0;
  double mean_weight = 0.0;
  double clip_fraction = 0.0;
  std::size_t clamped = 0;
  std::size_t transitions = 0;
  bool applied = false;
  std::string diagnostic;
};

// Accumulates the gradient of -E[min(w A, clip(w) A)] for one minibatch
// into `grad_buffer` (scaled by `scale`). Returns the batch statistics.
// Advantages are optionally standardized within the minibatch.
UpdateStats accumulate_policy_gradient(const diffusion::DenoiserNet& net,
                                       std::span<const Transition* const> minibatch,
                                       const PpoConfig& ppo,
                                       const diffusion::NoiseSchedule& schedule,
                                       const diffusion::DiffusionConfig& config, double scale,
                                       MlpParams& grad_buffer);

// One minibatch step: accumulate then apply AdamW. A non-finite objective or
// gradient skips the update and reports why.
UpdateStats policy_update(diffusion::DenoiserNet& net, std::span<const Transition* const> minibatch,
                          const PpoConfig& ppo, AdamWState& optimizer,
                          const diffusion::NoiseSchedule& schedule,
                          const diffusion::DiffusionConfig& config);

enum class CriticTarget { kAdvantage, kLambdaReturn };
std::string to_string(CriticTarget target);
CriticTarget critic_target_from_string(const std::string& name);

// Regression targets for the value net: the stamped step advantage, or the
// stage lambda-return A_j + V_j.
double critic_target(const Transition& tr, CriticTarget mode);

std::vector<advantage::CriticExample> critic_examples(std::span<const Transition* const> minibatch,
                                                      CriticTarget mode);

}  // namespace tlmdp::ppo
