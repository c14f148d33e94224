#pragma once

#include <span>
#include <string>
#include <vector>

#include "tlmdp/core/mlp.hpp"

namespace tlmdp::advantage {

// V_phi(sample, stage): an MLP over the sample concatenated with a one-hot
// stage encoding. Scalar output.
struct Critic {
  MlpParams net;
  std::size_t sample_dim = 0;
  int stages = 0;

  static Critic create(std::size_t sample_dim, int stages, const std::vector<std::size_t>& hidden,
                       SeededRng& rng, double init_std = 0.02);

  // stage is 1-based.
  std::vector<double> make_input(std::span<const double> sample, int stage) const;

  friend bool operator==(const Critic&, const Critic&) = default;
};

double critic_value(const Critic& critic, std::span<const double> sample, int stage);

struct CriticExample {
  std::vector<double> sample;
  int stage = 1;
  double target = 0.0;
};

struct CriticLoss {
  double loss = 0.0;
  MlpParams grads;
};

// Mean squared error over the batch and its exact gradient wrt phi.
CriticLoss critic_loss_and_grads(const Critic& critic, std::span<const CriticExample> batch);

}  // namespace tlmdp::advantage
