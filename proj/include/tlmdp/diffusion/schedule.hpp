#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tlmdp::diffusion {

// Discrete noise schedule indexed t = 0..T. Index 0 is the clean sample:
// alpha_bar(0) == 1 and beta(0) is unused.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  int steps() const { return steps_; }
  double beta(int t) const { return beta_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }

  friend NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

 private:
  int steps_ = 0;
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

// Linear beta from beta_min (t=1) to beta_max (t=T).
NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

// The 1000-step linear range (1e-4, 0.02) rescaled by 1000/T, with beta_max
// capped at kMaxDefaultBeta so short schedules stay valid.
inline constexpr double kMaxDefaultBeta = 0.5;
std::pair<double, double> default_beta_range(int steps);

}  // namespace tlmdp::diffusion
