#include "tlmdp/core/adamw.hpp"

#include <cmath>

#include "tlmdp/core/errors.hpp"

namespace tlmdp {

void AdamWConfig::validate(const std::string& prefix) const {
  if (!(learning_rate > 0.0)) throw ConfigError(prefix + ".lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError(prefix + ".beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError(prefix + ".beta2 must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError(prefix + ".weight_decay must be non-negative");
  if (!(epsilon > 0.0)) throw ConfigError(prefix + ".eps must be positive");
}

AdamWState AdamWState::for_params(const MlpParams& params, const AdamWConfig& config) {
  return AdamWState{config, MlpParams::zeros_like(params), MlpParams::zeros_like(params), 0};
}

StepReport optimizer_step(MlpParams& params, const MlpParams& grads, AdamWState& state) {
  if (!grads.same_architecture(params) || !state.first_moment.same_architecture(params)) {
    throw ConfigError("optimizer_step: gradient or moment shapes do not match parameters");
  }
  if (!grads.all_finite()) {
    return {false, "non-finite gradient; update skipped at step " + std::to_string(state.step)};
  }
  const AdamWConfig& cfg = state.config;
  const std::uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;

  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double lr = cfg.learning_rate;
  const double eps = cfg.epsilon;
  auto update = [&](RealArray& p, const RealArray& g, RealArray& m, RealArray& v) {
    double* pp = p.raw().data();
    const double* gp = g.raw().data();
    double* mp = m.raw().data();
    double* vp = v.raw().data();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      mp[i] = b1 * mp[i] + (1.0 - b1) * gp[i];
      vp[i] = b2 * vp[i] + (1.0 - b2) * gp[i] * gp[i];
      const double m_hat = mp[i] / bc1;
      const double v_hat = vp[i] / bc2;
      pp[i] = pp[i] * decay - lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  };
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    DenseLayer& p = params.layers()[l];
    const DenseLayer& g = grads.layers()[l];
    DenseLayer& m = state.first_moment.layers()[l];
    DenseLayer& v = state.second_moment.layers()[l];
    update(p.weight, g.weight, m.weight, v.weight);
    update(p.bias, g.bias, m.bias, v.bias);
  }
  state.step = t;
  return {true, {}};
}

}  // namespace tlmdp
