#include "tlmdp/reward/reward.hpp"

#include <algorithm>
#include <limits>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/core/real_array.hpp"

namespace tlmdp::reward {
namespace {

constexpr double kNormTolerance = 1e-6;

void require_unit(std::span<const double> x, const char* what) {
  const double n = norm2(x);
  if (std::abs(n - 1.0) > kNormTolerance) {
    throw InputError(std::string(what) + " is not unit-norm (|x| = " + std::to_string(n) + ")");
  }
}

}  // namespace

void RewardConfig::validate() const {
  if (!(tau > -1.0 && tau < 1.0)) throw ConfigError("reward.tau must be in (-1, 1)");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("reward.decay must be in (0, 1)");
  if (!(rho >= 0.0)) throw ConfigError("reward.rho must be non-negative (0 = default)");
  if (!(alpha >= 0.0 && beta >= 0.0 && kappa >= 0.0)) {
    throw ConfigError("reward.alpha, reward.beta and reward.kappa must be non-negative");
  }
  if (alpha == 0.0 && beta == 0.0 && kappa == 0.0) {
    throw ConfigError("reward.alpha, reward.beta, reward.kappa: at least one must be positive");
  }
}

std::vector<double> stage_weights(int stages, double decay) {
  if (stages < 1) throw ConfigError("stage_weights: j must be at least 1");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("stage_weights: decay must be in (0, 1)");
  std::vector<double> w(static_cast<std::size_t>(stages));
  double p = 1.0;
  double total = 0.0;
  for (double& x : w) {
    x = p;
    total += p;
    p *= decay;
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> image_embedding(std::span<const double> x0) {
  const double n = norm2(x0);
  if (n < 1e-9) {
    throw DegenerateSampleError("image_embedding: |x0| = " + std::to_string(n) + " < 1e-9");
  }
  std::vector<double> v(x0.begin(), x0.end());
  for (double& x : v) x /= n;
  return v;
}

double staged_alignment_reward(std::span<const double> v,
                               const std::vector<std::vector<double>>& stage_embeddings,
                               std::span<const double> weights) {
  if (weights.size() != stage_embeddings.size()) {
    throw InputError("staged_alignment_reward: " + std::to_string(weights.size()) +
                     " weights for " + std::to_string(stage_embeddings.size()) + " sub-sentences");
  }
  require_unit(v, "image embedding");
  double r = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require_unit(stage_embeddings[k], "sub-sentence embedding");
    r += weights[k] * dot(v, stage_embeddings[k]);
  }
  return r;
}

double subject_reward(std::span<const double> v,
                      const std::vector<std::vector<double>>& subject_embeddings) {
  if (subject_embeddings.empty()) throw InputError("subject_reward: empty subject list");
  double r = 0.0;
  for (const auto& e : subject_embeddings) r += dot(v, e);
  return r;
}

double max_cosine(std::span<const double> v, const std::vector<std::vector<double>>& embeddings) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : embeddings) best = std::max(best, dot(v, e));
  return best;
}

double vehicle_penalty(std::span<const double> v,
                       const std::vector<std::vector<double>>& vehicle_embeddings, double tau) {
  if (vehicle_embeddings.empty()) throw InputError("vehicle_penalty: empty vehicle list");
  return max_cosine(v, vehicle_embeddings) > tau ? kVehiclePenalty : 0.0;
}

double aesthetic_proxy(std::span<const double> x0, double rho) {
  if (!(rho > 0.0)) throw ConfigError("aesthetic_proxy: rho must be positive");
  return std::max(0.0, 1.0 - norm2(x0) / rho);
}

double mix_components(double stage, double subject, double vehicle, double aesthetic,
                      const RewardConfig& cfg) {
  return cfg.alpha * stage + cfg.beta * subject + vehicle + cfg.kappa * aesthetic;
}

RewardContext RewardContext::build(const staging::FactorSet& factors,
                                   const staging::StagedPromptPlan& plan,
                                   const staging::EmbeddingOracle& oracle) {
  RewardContext ctx;
  for (const auto& k : factors.subject_keywords) ctx.subject_embeddings.push_back(oracle.embed_token(k));
  for (const auto& k : factors.vehicle_keywords) ctx.vehicle_embeddings.push_back(oracle.embed_token(k));
  ctx.plan = &plan;
  return ctx;
}

RewardBreakdown composite_reward(std::span<const double> x0, int stage, const RewardContext& ctx,
                                 const RewardConfig& cfg) {
  if (ctx.plan == nullptr) throw ConfigError("composite_reward: reward context has no plan");
  if (stage < 1 || stage > ctx.plan->stages()) {
    throw InputError("composite_reward: stage " + std::to_string(stage) + " out of range");
  }
  RewardBreakdown out;
  out.aesthetic = aesthetic_proxy(x0, cfg.radius(x0.size()));
  try {
    const std::vector<double> v = image_embedding(x0);
    const std::vector<double> w = stage_weights(stage, cfg.decay);
    const std::vector<std::vector<double>> sub_sentences(
        ctx.plan->stage_embeddings.begin(), ctx.plan->stage_embeddings.begin() + stage);
    out.stage = staged_alignment_reward(v, sub_sentences, w);
    out.subject = subject_reward(v, ctx.subject_embeddings);
    out.subject_cosine = out.subject / static_cast<double>(ctx.subject_embeddings.size());
    out.max_vehicle_cosine = max_cosine(v, ctx.vehicle_embeddings);
    out.vehicle = vehicle_penalty(v, ctx.vehicle_embeddings, cfg.tau);
  } catch (const DegenerateSampleError&) {
    out.degenerate = true;
  }
  out.composite = mix_components(out.stage, out.subject, out.vehicle, out.aesthetic, cfg);
  return out;
}

}  // namespace tlmdp::reward
