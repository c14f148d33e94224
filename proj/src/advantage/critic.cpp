#include "tlmdp/advantage/critic.hpp"

#include "tlmdp/core/errors.hpp"

namespace tlmdp::advantage {

Critic Critic::create(std::size_t sample_dim, int stages, const std::vector<std::size_t>& hidden,
                      SeededRng& rng, double init_std) {
  if (sample_dim == 0 || stages < 1) throw ConfigError("critic: bad input dimensions");
  std::vector<std::size_t> dims{sample_dim + static_cast<std::size_t>(stages)};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return Critic{MlpParams::create(dims, Activation::kMish, Activation::kIdentity, rng, init_std),
                sample_dim, stages};
}

std::vector<double> Critic::make_input(std::span<const double> sample, int stage) const {
  if (sample.size() != sample_dim) {
    throw ConfigError("critic: sample has " + std::to_string(sample.size()) +
                      " entries, expected " + std::to_string(sample_dim));
  }
  if (stage < 1 || stage > stages) {
    throw ConfigError("critic: stage " + std::to_string(stage) + " outside [1, " +
                      std::to_string(stages) + "]");
  }
  std::vector<double> in(sample.begin(), sample.end());
  in.resize(sample_dim + static_cast<std::size_t>(stages), 0.0);
  in[sample_dim + static_cast<std::size_t>(stage - 1)] = 1.0;
  return in;
}

double critic_value(const Critic& critic, std::span<const double> sample, int stage) {
  return mlp_forward(critic.net, critic.make_input(sample, stage))[0];
}

CriticLoss critic_loss_and_grads(const Critic& critic, std::span<const CriticExample> batch) {
  if (batch.empty()) throw InputError("critic_loss_and_grads: empty batch");
  CriticLoss out{0.0, MlpParams::zeros_like(critic.net)};
  const double n = static_cast<double>(batch.size());
  for (const CriticExample& ex : batch) {
    const MlpTape tape = mlp_forward_tape(critic.net, critic.make_input(ex.sample, ex.stage));
    const double err = tape.output()[0] - ex.target;
    out.loss += err * err / n;
    const double upstream = 2.0 * err / n;
    if (upstream != 0.0) mlp_backward_tape(critic.net, tape, {&upstream, 1}, out.grads);
  }
  return out;
}

}  // namespace tlmdp::advantage
