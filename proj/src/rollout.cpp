#include "swarmrl/rollout.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "swarmrl/fmt.hpp"

namespace swarm {

double run_episode(const Mlp& actor, const TaskSpec& spec, int history_horizon,
                   std::uint64_t seed, TrajectoryWriter* trajectory,
                   int episode_index) {
  int obs_dim = spec.observation_dim();
  int history_dim = history_horizon * (obs_dim + 2);
  if (actor.input_dim() != history_dim)
    throw std::invalid_argument(fmt_str(
        "actor input width %d does not match task history dim %d "
        "(obs dim %d, horizon %d)",
        actor.input_dim(), history_dim, obs_dim, history_horizon));

  GlobalState state = reset(spec, seed);
  std::vector<AgentHistory> histories(
      spec.agents, AgentHistory(history_horizon, obs_dim));
  std::vector<AgentAction> actions(spec.agents);

  double episode_return = 0.0;
  for (int t = 1; t <= spec.episode_steps; ++t) {
    for (int i = 0; i < spec.agents; ++i) {
      std::vector<double> out = actor.forward(histories[i].flattened());
      actions[i] = clamp_action({out[0], out[1]});
    }
    StepResult sr = step(state, actions, spec);
    episode_return += sr.reward;
    for (int i = 0; i < spec.agents; ++i)
      histories[i].push(observe(sr.state, i, spec), actions[i]);
    state = std::move(sr.state);
    if (trajectory) trajectory->append(episode_index, t, state, sr.reward);
  }
  return episode_return;
}

EvalSummary summarize_returns(std::vector<double> returns) {
  EvalSummary s;
  s.returns = std::move(returns);
  if (s.returns.empty()) return s;
  double sum = 0.0;
  for (double r : s.returns) sum += r;
  s.mean = sum / static_cast<double>(s.returns.size());
  double sq = 0.0;
  for (double r : s.returns) sq += (r - s.mean) * (r - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.returns.size()));
  return s;
}

EvalSummary evaluate(const Mlp& actor, const TaskSpec& spec,
                     int history_horizon, int runs, std::uint64_t seed,
                     int jobs) {
  if (runs < 1) throw std::invalid_argument("evaluate needs runs >= 1");
  int history_dim = history_horizon * (spec.observation_dim() + 2);
  if (actor.input_dim() != history_dim)
    throw std::invalid_argument(fmt_str(
        "actor input width %d does not match task history dim %d "
        "(obs dim %d, horizon %d)",
        actor.input_dim(), history_dim, spec.observation_dim(),
        history_horizon));
  std::vector<double> returns(runs);
  if (jobs <= 1) {
    for (int r = 0; r < runs; ++r)
      returns[r] = run_episode(actor, spec, history_horizon,
                               derive_seed(seed, r));
  } else {
    std::vector<std::thread> workers;
    int n = std::min(jobs, runs);
    for (int w = 0; w < n; ++w) {
      workers.emplace_back([&, w] {
        for (int r = w; r < runs; r += n)
          returns[r] = run_episode(actor, spec, history_horizon,
                                   derive_seed(seed, r));
      });
    }
    for (auto& t : workers) t.join();
  }
  return summarize_returns(std::move(returns));
}

}  // namespace swarm
