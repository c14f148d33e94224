#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tlmdp/staging/embedding.hpp"
#include "tlmdp/staging/factors.hpp"
#include "tlmdp/staging/stage_plan.hpp"

namespace tlmdp::reward {

struct RewardConfig {
  double tau = 0.5;    // vehicle presence threshold
  double decay = 0.5;  // stage weight ratio w_{k+1} / w_k
  double rho = 0.0;    // aesthetic radius; 0 selects 4 * sqrt(d)
  double alpha = 1.0;  // staged alignment
  double beta = 1.0;   // subject sum
  double kappa = 0.1;  // aesthetic proxy

  void validate() const;
  double radius(std::size_t dim) const { return rho > 0.0 ? rho : 4.0 * std::sqrt(static_cast<double>(dim)); }
  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

// w_k ∝ decay^(k-1), normalized: strictly decreasing with unit sum.
std::vector<double> stage_weights(int stages, double decay);

// v = x0 / |x0|; throws DegenerateSampleError when |x0| < 1e-9.
std::vector<double> image_embedding(std::span<const double> x0);

// sum_k w_k <v, u_k>; v and every u_k must be unit-norm to 1e-6.
double staged_alignment_reward(std::span<const double> v,
                               const std::vector<std::vector<double>>& stage_embeddings,
                               std::span<const double> weights);

// Unnormalized sum of cosines with each subject keyword.
double subject_reward(std::span<const double> v,
                      const std::vector<std::vector<double>>& subject_embeddings);

double max_cosine(std::span<const double> v, const std::vector<std::vector<double>>& embeddings);

// -1.0 iff the largest vehicle-keyword cosine is strictly above tau.
inline constexpr double kVehiclePenalty = -1.0;
double vehicle_penalty(std::span<const double> v,
                       const std::vector<std::vector<double>>& vehicle_embeddings, double tau);

// max(0, 1 - |x0| / rho).
double aesthetic_proxy(std::span<const double> x0, double rho);

struct RewardBreakdown {
  double stage = 0.0;
  double subject = 0.0;
  double vehicle = 0.0;
  double aesthetic = 0.0;
  double composite = 0.0;
  // Diagnostics, not part of the composite.
  double subject_cosine = 0.0;  // subject / |subject list|
  double max_vehicle_cosine = 0.0;
  bool degenerate = false;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double mix_components(double stage, double subject, double vehicle, double aesthetic,
                      const RewardConfig& cfg);

// Per-input reward context: keyword embeddings and the staged plan.
struct RewardContext {
  std::vector<std::vector<double>> subject_embeddings;
  std::vector<std::vector<double>> vehicle_embeddings;
  const staging::StagedPromptPlan* plan = nullptr;

  static RewardContext build(const staging::FactorSet& factors,
                             const staging::StagedPromptPlan& plan,
                             const staging::EmbeddingOracle& oracle);
};

// r = alpha r_stage + beta r_subject + r_vehicle + kappa r_aesthetic for the
// sample generated from stage j's prompt. A degenerate x0 zeroes the
// embedding-based terms and sets `degenerate`.
RewardBreakdown composite_reward(std::span<const double> x0, int stage, const RewardContext& ctx,
                                 const RewardConfig& cfg);

}  // namespace tlmdp::reward
