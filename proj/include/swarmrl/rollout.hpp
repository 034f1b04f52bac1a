#pragma once

#include <cstdint>
#include <vector>

#include "swarmrl/net.hpp"
#include "swarmrl/task.hpp"

namespace swarm {

// Undiscounted return of one noise-free episode under the shared actor.
// Throws std::invalid_argument when the actor's input width does not match
// the task's flattened history dimension.
double run_episode(const Mlp& actor, const TaskSpec& spec, int history_horizon,
                   std::uint64_t seed, TrajectoryWriter* trajectory = nullptr,
                   int episode_index = 0);

struct EvalSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::vector<double> returns;
};

// `runs` independent seeded episodes without exploration noise. Run seeds are
// derived from `seed` per run index, so results do not depend on `jobs`.
EvalSummary evaluate(const Mlp& actor, const TaskSpec& spec,
                     int history_horizon, int runs, std::uint64_t seed,
                     int jobs = 1);

EvalSummary summarize_returns(std::vector<double> returns);

}  // namespace swarm
