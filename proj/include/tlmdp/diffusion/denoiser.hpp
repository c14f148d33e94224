#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tlmdp/core/mlp.hpp"

namespace tlmdp::diffusion {

// Width of the timestep encoding (t/T, sin(2 pi t/T), cos(2 pi t/T)).
inline constexpr std::size_t kTimeFeatures = 3;

std::vector<double> encode_timestep(int t, int steps);

// Noise predictor eps(x_t, t, c). The unconditional branch feeds the null
// (all-zero) prompt embedding.
struct DenoiserNet {
  MlpParams net;
  std::size_t latent_dim = 0;
  std::size_t prompt_dim = 0;

  // Hidden layers use Mish, the output layer is linear.
  static DenoiserNet create(std::size_t latent_dim, std::size_t prompt_dim,
                            const std::vector<std::size_t>& hidden, SeededRng& rng,
                            double init_std = 0.02);

  std::vector<double> null_embedding() const { return std::vector<double>(prompt_dim, 0.0); }
  std::vector<double> make_input(std::span<const double> x_t, int t, int steps,
                                 std::span<const double> prompt) const;

  friend bool operator==(const DenoiserNet&, const DenoiserNet&) = default;
};

struct EpsPrediction {
  std::vector<double> guided;
  std::vector<double> conditional;
  std::vector<double> unconditional;
};

// Classifier-free guidance: eps_u + g * (eps_c - eps_u).
EpsPrediction predict_eps(const DenoiserNet& net, std::span<const double> x_t, int t, int steps,
                          std::span<const double> prompt, double guidance);

// grads += d<upstream, guided eps>/dtheta.
void predict_eps_backward(const DenoiserNet& net, std::span<const double> x_t, int t, int steps,
                          std::span<const double> prompt, double guidance,
                          std::span<const double> upstream, MlpParams& grads);

}  // namespace tlmdp::diffusion
