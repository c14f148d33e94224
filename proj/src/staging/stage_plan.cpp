#include "tlmdp/staging/stage_plan.hpp"

#include <algorithm>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/core/real_array.hpp"

namespace tlmdp::staging {
namespace {

bool contains(const std::vector<std::string>& list, const std::string& token) {
  return std::find(list.begin(), list.end(), token) != list.end();
}

bool is_vehicle_token(const FactorSet& f, const std::string& token) {
  return token == f.vehicle || contains(f.vehicle_keywords, token);
}

}  // namespace

StagedPromptPlan build_stage_plan(const FactorSet& factors, int stages,
                                  const EmbeddingOracle& oracle) {
  if (stages < 1) throw ConfigError("stage plan: C must be at least 1");
  factors.validate("stage plan");

  std::vector<std::string> used;
  auto admissible = [&](const std::string& token) {
    return !token.empty() && !contains(used, token) && !is_vehicle_token(factors, token);
  };

  std::vector<std::string> core;
  auto take = [&](const std::string& token) {
    if (!admissible(token)) return;
    core.push_back(token);
    used.push_back(token);
  };
  take(factors.subject);
  for (const std::string& token : factors.subject_keywords) take(token);
  if (core.empty()) throw ConfigError("stage plan: subject stage would be empty");

  StagedPromptPlan plan;
  plan.increments.push_back(std::move(core));
  for (const std::string& token : {factors.theme, factors.emotion, factors.device}) {
    if (plan.stages() == stages) break;
    if (!admissible(token)) continue;
    used.push_back(token);
    plan.increments.push_back({token});
  }
  if (plan.stages() < stages) {
    throw ConfigError("stage plan: C=" + std::to_string(stages) + " exceeds the " +
                      std::to_string(plan.stages()) + " available increments");
  }

  std::vector<std::string> cumulative;
  for (const auto& inc : plan.increments) {
    cumulative.insert(cumulative.end(), inc.begin(), inc.end());
    plan.prompts.push_back(cumulative);
    plan.stage_embeddings.push_back(oracle.embed_tokens(inc));
  }
  return plan;
}

std::vector<double> embed_prompt(const StagedPromptPlan& plan, int stage,
                                 std::span<const double> weights) {
  if (stage < 1 || stage > plan.stages()) {
    throw InputError("embed_prompt: stage " + std::to_string(stage) + " outside [1, " +
                     std::to_string(plan.stages()) + "]");
  }
  if (weights.size() != static_cast<std::size_t>(stage)) {
    throw InputError("embed_prompt: expected " + std::to_string(stage) + " weights, got " +
                     std::to_string(weights.size()));
  }
  std::vector<double> c(plan.stage_embeddings.front().size(), 0.0);
  for (int k = 0; k < stage; ++k) {
    axpy(weights[static_cast<std::size_t>(k)], plan.stage_embeddings[static_cast<std::size_t>(k)], c);
  }
  return normalized(std::move(c));
}

}  // namespace tlmdp::staging
