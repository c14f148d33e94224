#include "tlmdp/ppo/pool.hpp"

#include <algorithm>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::ppo {

TransitionPool collect_pool(const std::vector<advantage::OuterEpisode>& episodes,
                            const std::vector<advantage::AdvantageEstimate>& advantages) {
  if (episodes.size() != advantages.size()) {
    throw Error("collect_pool: " + std::to_string(episodes.size()) + " episodes but " +
                std::to_string(advantages.size()) + " advantage estimates");
  }
  TransitionPool pool;
  pool.inputs = episodes.size();
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const advantage::OuterEpisode& ep = episodes[e];
    const advantage::AdvantageEstimate& adv = advantages[e];
    if (adv.stage_advantages.size() != ep.stages.size() ||
        adv.step_advantages.size() != ep.stages.size()) {
      throw Error("collect_pool: episode '" + ep.input_id + "' is missing advantages");
    }
    if (e == 0) pool.stages = static_cast<int>(ep.stages.size());
    for (std::size_t j = 0; j < ep.stages.size(); ++j) {
      const advantage::StageOutcome& stage = ep.stages[j];
      const auto& records = stage.trajectory.records;
      if (adv.step_advantages[j].size() != records.size()) {
        throw Error("collect_pool: episode '" + ep.input_id + "' stage " + std::to_string(j + 1) +
                    " has advantages for " + std::to_string(adv.step_advantages[j].size()) +
                    " of " + std::to_string(records.size()) + " steps");
      }
      if (e == 0 && j == 0) pool.steps = static_cast<int>(records.size());
      auto prompt = std::make_shared<const std::vector<double>>(stage.prompt);
      for (const diffusion::StepRecord& rec : records) {
        Transition tr;
        tr.input_index = ep.input_index;
        tr.input_id = ep.input_id;
        tr.stage = stage.stage;
        tr.t = rec.t;
        tr.prompt = prompt;
        tr.x_t = rec.x_t;
        tr.action = rec.action;
        tr.old_log_prob = rec.log_prob;
        tr.old_variance = rec.variance;
        tr.x0_pred = rec.x0_pred;
        tr.reward = rec.t == 1 ? stage.reward.composite : 0.0;
        tr.stage_advantage = adv.stage_advantages[j];
        tr.stage_value = stage.value;
        tr.advantage = adv.step_advantages[j][static_cast<std::size_t>(rec.t - 1)];
        pool.transitions.push_back(std::move(tr));
      }
    }
  }
  return pool;
}

std::vector<std::vector<std::size_t>> shuffle_and_batch(const TransitionPool& pool,
                                                        SeededRng& rng, std::size_t batch_size) {
  if (pool.size() == 0) throw InputError("shuffle_and_batch: empty pool");
  if (batch_size == 0) throw ConfigError("shuffle_and_batch: batch size must be positive");
  const std::vector<std::size_t> perm = random_permutation(pool.size(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < perm.size(); start += batch_size) {
    const std::size_t end = std::min(perm.size(), start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<long>(start), perm.begin() + static_cast<long>(end));
  }
  return batches;
}

}  // namespace tlmdp::ppo
