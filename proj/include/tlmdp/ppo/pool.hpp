#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tlmdp/advantage/gae.hpp"
#include "tlmdp/core/rng.hpp"

namespace tlmdp::ppo {

// One adjacent action pair s_t = (c, t, x_t) -> a_t = x_{t-1}, stamped with
// its propagated advantage.
struct Transition {
  std::size_t input_index = 0;  // position of the episode within the round
  std::string input_id;
  int stage = 0;                // j, 1-based
  int t = 0;                    // diffusion step, 1-based
  std::shared_ptr<const std::vector<double>> prompt;
  std::vector<double> x_t;
  std::vector<double> action;
  double old_log_prob = 0.0;
  double old_variance = 0.0;
  std::vector<double> x0_pred;  // critic input for the value regression
  double reward = 0.0;          // r_i^j at t = 1, zero elsewhere
  double stage_advantage = 0.0; // A_j
  double stage_value = 0.0;     // V_j used by the GAE
  double advantage = 0.0;       // gamma_denoise^t * A_j
};

struct TransitionPool {
  std::vector<Transition> transitions;
  std::size_t inputs = 0;  // N
  int stages = 0;          // C
  int steps = 0;           // T

  std::size_t size() const { return transitions.size(); }
};

// Flattens N episodes x C stages x T steps into one pool.
TransitionPool collect_pool(const std::vector<advantage::OuterEpisode>& episodes,
                            const std::vector<advantage::AdvantageEstimate>& advantages);

// Seeded uniform permutation of the pool cut into batches of batch_size (the
// last batch may be short). Entries are pool indices.
std::vector<std::vector<std::size_t>> shuffle_and_batch(const TransitionPool& pool,
                                                        SeededRng& rng, std::size_t batch_size);

}  // namespace tlmdp::ppo
