#include "tlmdp/advantage/gae.hpp"

#include <cmath>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::advantage {

void GaeConfig::validate() const {
  auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!in_unit(gamma)) throw ConfigError("gae.gamma must be in (0, 1]");
  if (!in_unit(lambda)) throw ConfigError("gae.lambda must be in (0, 1]");
  if (!in_unit(gamma_denoise)) throw ConfigError("gae.gamma_denoise must be in (0, 1]");
}

std::vector<double> outer_gae(std::span<const double> rewards, std::span<const double> values,
                              double gamma, double lambda) {
  if (rewards.size() != values.size()) {
    throw InputError("outer_gae: " + std::to_string(rewards.size()) + " rewards but " +
                     std::to_string(values.size()) + " values");
  }
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double next = j + 1 < n ? values[j + 1] : 0.0;
    delta[j] = rewards[j] + gamma * next - values[j];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double weight = 1.0;
    for (std::size_t l = 0; j + l < n; ++l) {
      adv[j] += weight * delta[j + l];
      weight *= gamma * lambda;
    }
  }
  return adv;
}

std::vector<double> inner_discount(double stage_advantage, double gamma_denoise, int steps) {
  if (steps < 1) throw ConfigError("inner_discount: T must be at least 1");
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    out[static_cast<std::size_t>(t - 1)] = std::pow(gamma_denoise, t) * stage_advantage;
  }
  return out;
}

AdvantageEstimate estimate_advantages(const OuterEpisode& episode, const GaeConfig& cfg) {
  std::vector<double> rewards;
  std::vector<double> values;
  for (const StageOutcome& s : episode.stages) {
    rewards.push_back(s.reward.composite);
    values.push_back(s.value);
  }
  AdvantageEstimate est;
  est.stage_advantages = outer_gae(rewards, values, cfg.gamma, cfg.lambda);
  for (std::size_t j = 0; j < episode.stages.size(); ++j) {
    const int steps = static_cast<int>(episode.stages[j].trajectory.records.size());
    est.step_advantages.push_back(inner_discount(est.stage_advantages[j], cfg.gamma_denoise, steps));
  }
  return est;
}

}  // namespace tlmdp::advantage
