#pragma once

#include <ostream>
#include <utility>

#include "swarmrl/trainer.hpp"

namespace swarm {

struct CrossEvalCell {
  int m_train = 0;
  int m_eval = 0;
  double mean = 0.0;
  double stddev = 0.0;
  int runs = 0;
};

// Evaluates every (policy trained at m_train) x (swarm size m_eval) pair of
// the grid. The actor is swarm-size independent, so the same network runs at
// every m_eval. Cell seeds are derived from (seed, m_train, m_eval), making
// the grid invariant to computation order.
std::vector<CrossEvalCell> cross_evaluate(
    const std::vector<std::pair<int, Mlp>>& policies,
    const std::vector<int>& eval_agents, const TaskSpec& base_spec,
    int history_horizon, int runs, std::uint64_t seed, int jobs = 1);

void write_cross_eval_csv(std::ostream& out,
                          const std::vector<CrossEvalCell>& cells);

void write_returns_csv(std::ostream& out, const EvalSummary& summary);

struct BaselineResult {
  TrainResult training;
  EvalSummary final_eval;
};

// Single-agent localization policy without inter-agent communication: the
// observation is reduced to [found_bit, target_distance]. Trained with the
// identical trainer and evaluated noise-free. The spec must be a localization
// task; it is forced to one agent and no_comm observations.
BaselineResult no_comm_baseline(TaskSpec spec, TrainerConfig cfg, int episodes,
                                int final_eval_runs, std::uint64_t seed,
                                const Trainer::EvalHook& on_eval = {});

}  // namespace swarm
