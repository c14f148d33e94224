#pragma once

#include <cstdint>
#include <string>

#include "tlmdp/core/mlp.hpp"

namespace tlmdp {

struct AdamWConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double epsilon = 1e-8;

  void validate(const std::string& prefix) const;
  friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

// Moments share the architecture of the parameters they track.
struct AdamWState {
  AdamWConfig config;
  MlpParams first_moment;
  MlpParams second_moment;
  std::uint64_t step = 0;

  static AdamWState for_params(const MlpParams& params, const AdamWConfig& config);
  friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

struct StepReport {
  bool applied = false;
  std::string diagnostic;  // set when the update was refused
};

// Bias-corrected Adam update with decoupled weight decay:
//   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps).
// A non-finite gradient leaves params and state untouched.
StepReport optimizer_step(MlpParams& params, const MlpParams& grads, AdamWState& state);

}  // namespace tlmdp
