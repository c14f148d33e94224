#pragma once

#include <span>
#include <string>
#include <vector>

#include "tlmdp/diffusion/policy.hpp"
#include "tlmdp/reward/reward.hpp"

namespace tlmdp::advantage {

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double gamma_denoise = 0.95;

  void validate() const;
  friend bool operator==(const GaeConfig&, const GaeConfig&) = default;
};

// A_j = sum_{l=0}^{C-j} (gamma lambda)^l delta_{j+l},
// delta_j = r_j + gamma V_{j+1} - V_j, with V_{C+1} = 0.
// Evaluated as the direct double sum.
std::vector<double> outer_gae(std::span<const double> rewards, std::span<const double> values,
                              double gamma, double lambda);

// Element [t-1] holds gamma_denoise^t * stage_advantage for t = 1..T.
std::vector<double> inner_discount(double stage_advantage, double gamma_denoise, int steps);

// One staged generation of an outer episode.
struct StageOutcome {
  int stage = 0;
  std::vector<double> prompt;
  diffusion::Trajectory trajectory;
  reward::RewardBreakdown reward;
  double value = 0.0;  // V_phi(x0, stage) before this round's updates
};

struct OuterEpisode {
  std::string input_id;
  std::size_t input_index = 0;
  std::vector<StageOutcome> stages;
};

struct AdvantageEstimate {
  std::vector<double> stage_advantages;           // A_j, j = 1..C
  std::vector<std::vector<double>> step_advantages;  // [j-1][t-1]
};

AdvantageEstimate estimate_advantages(const OuterEpisode& episode, const GaeConfig& cfg);

}  // namespace tlmdp::advantage
