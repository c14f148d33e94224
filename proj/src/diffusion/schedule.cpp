#include "tlmdp/diffusion/schedule.hpp"

#include <algorithm>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::diffusion {

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw ConfigError("schedule: T must be at least 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw ConfigError("schedule: need 0 < beta_min <= beta_max < 1, got (" +
                      std::to_string(beta_min) + ", " + std::to_string(beta_max) + ")");
  }
  NoiseSchedule s;
  s.steps_ = steps;
  s.beta_.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  s.alpha_bar_.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    const double beta = beta_min + (beta_max - beta_min) * frac;
    s.beta_[static_cast<std::size_t>(t)] = beta;
    s.alpha_bar_[static_cast<std::size_t>(t)] = s.alpha_bar_[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
  }
  return s;
}

std::pair<double, double> default_beta_range(int steps) {
  if (steps < 1) throw ConfigError("schedule: T must be at least 1");
  const double scale = 1000.0 / steps;
  const double beta_max = std::min(0.02 * scale, kMaxDefaultBeta);
  const double beta_min = std::min(1e-4 * scale, beta_max);
  return {beta_min, beta_max};
}

}  // namespace tlmdp::diffusion
