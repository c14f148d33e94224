#pragma once

#include <span>
#include <string>
#include <vector>

#include "tlmdp/staging/embedding.hpp"
#include "tlmdp/staging/factors.hpp"

namespace tlmdp::staging {

// Staged prompts P^1 ⊊ P^2 ⊊ ... ⊊ P^C. Stage 1 carries the subject; each
// later stage adds one increment from (theme, emotion, device) in that order.
// Vehicle tokens never enter a prompt.
struct StagedPromptPlan {
  std::vector<std::vector<std::string>> increments;   // Δ_k
  std::vector<std::vector<std::string>> prompts;      // P^j = Δ_1 ∪ ... ∪ Δ_j
  std::vector<std::vector<double>> stage_embeddings;  // u_k = embed(Δ_k)

  int stages() const { return static_cast<int>(increments.size()); }
};

// Throws ConfigError when fewer than C disjoint, vehicle-free increments exist.
StagedPromptPlan build_stage_plan(const FactorSet& factors, int stages,
                                  const EmbeddingOracle& oracle);

// c_j = normalize(sum_{k<=j} w_k u_k); `weights` must hold exactly j entries.
std::vector<double> embed_prompt(const StagedPromptPlan& plan, int stage,
                                 std::span<const double> weights);

}  // namespace tlmdp::staging
