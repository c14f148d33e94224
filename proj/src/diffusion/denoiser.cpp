#include "tlmdp/diffusion/denoiser.hpp"

#include <cmath>
#include <numbers>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::diffusion {

std::vector<double> encode_timestep(int t, int steps) {
  if (steps < 1 || t < 1 || t > steps) {
    throw InputError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps) +
                     "]");
  }
  const double phase = static_cast<double>(t) / steps;
  return {phase, std::sin(2.0 * std::numbers::pi * phase), std::cos(2.0 * std::numbers::pi * phase)};
}

DenoiserNet DenoiserNet::create(std::size_t latent_dim, std::size_t prompt_dim,
                                const std::vector<std::size_t>& hidden, SeededRng& rng,
                                double init_std) {
  if (latent_dim == 0) throw ConfigError("denoiser: latent dim must be positive");
  std::vector<std::size_t> dims{latent_dim + kTimeFeatures + prompt_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(latent_dim);
  return DenoiserNet{MlpParams::create(dims, Activation::kMish, Activation::kIdentity, rng, init_std),
                     latent_dim, prompt_dim};
}

std::vector<double> DenoiserNet::make_input(std::span<const double> x_t, int t, int steps,
                                            std::span<const double> prompt) const {
  if (x_t.size() != latent_dim) {
    throw ConfigError("denoiser: latent has " + std::to_string(x_t.size()) + " entries, expected " +
                      std::to_string(latent_dim));
  }
  if (prompt.size() != prompt_dim) {
    throw ConfigError("denoiser: prompt embedding has " + std::to_string(prompt.size()) +
                      " entries, expected " + std::to_string(prompt_dim));
  }
  const std::vector<double> time = encode_timestep(t, steps);
  return concat({x_t, time, prompt});
}

EpsPrediction predict_eps(const DenoiserNet& net, std::span<const double> x_t, int t, int steps,
                          std::span<const double> prompt, double guidance) {
  EpsPrediction out;
  out.conditional = mlp_forward(net.net, net.make_input(x_t, t, steps, prompt));
  const std::vector<double> null = net.null_embedding();
  out.unconditional = mlp_forward(net.net, net.make_input(x_t, t, steps, null));
  out.guided.resize(net.latent_dim);
  for (std::size_t i = 0; i < net.latent_dim; ++i) {
    out.guided[i] = out.unconditional[i] + guidance * (out.conditional[i] - out.unconditional[i]);
  }
  return out;
}

void predict_eps_backward(const DenoiserNet& net, std::span<const double> x_t, int t, int steps,
                          std::span<const double> prompt, double guidance,
                          std::span<const double> upstream, MlpParams& grads) {
  // guided = (1 - g) * eps_u + g * eps_c
  std::vector<double> up(upstream.begin(), upstream.end());
  if (guidance != 0.0) {
    for (double& u : up) u = guidance * u;
    mlp_backward_accumulate(net.net, net.make_input(x_t, t, steps, prompt), up, grads);
  }
  if (guidance != 1.0) {
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = (1.0 - guidance) * upstream[i];
    const std::vector<double> null = net.null_embedding();
    mlp_backward_accumulate(net.net, net.make_input(x_t, t, steps, null), up, grads);
  }
}

}  // namespace tlmdp::diffusion
