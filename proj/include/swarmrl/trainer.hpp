#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "swarmrl/net.hpp"
#include "swarmrl/replay.hpp"
#include "swarmrl/rollout.hpp"
#include "swarmrl/task.hpp"

namespace swarm {

// guided: critic sees the flattened global state. non_guided: critic sees the
// flattened joint observation-action histories instead.
enum class CriticMode { guided, non_guided };

struct TrainerConfig {
  double gamma = 0.99;
  double critic_lr = 1e-4;
  double actor_lr = 1e-4;
  double tau = 1e-4;
  int batch_size = 32;
  int warmup_transitions = 1000;
  std::size_t replay_capacity = 500000;
  double noise_speed = 0.1;
  double noise_turn = 0.1 * kPi;
  int updates_per_step = 1;
  CriticMode critic_mode = CriticMode::guided;
  std::vector<int> critic_hidden = {512, 256, 128};
  std::vector<int> actor_hidden = {1024, 512, 256, 128};
  double critic_output_init = 3e-4;
  double actor_output_init = 3e-3;
  int history_horizon = 10;
  int eval_every_episodes = 20;
  int eval_runs = 50;
  int eval_jobs = 1;
  bool invert_action_gradients = true;

  void validate() const;
};

struct MetricsRow {
  int episode = 0;
  long env_steps = 0;
  double critic_loss_mean = 0.0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double wallclock_s = 0.0;  // telemetry; the one column not reproducible by seed
};

struct TrainResult {
  Mlp actor;
  Mlp critic;
  std::vector<MetricsRow> log;
};

// Centralized-critic, shared-decentralized-actor deterministic policy
// gradient trainer. One critic evaluates the joint action; one actor maps
// each agent's observation-action history to its action.
class Trainer {
 public:
  Trainer(TaskSpec spec, TrainerConfig cfg, std::uint64_t seed);

  const TaskSpec& task() const { return spec_; }
  const TrainerConfig& config() const { return cfg_; }
  const Mlp& actor() const { return actor_.live; }
  const Mlp& critic() const { return critic_.live; }
  const Mlp& target_actor() const { return actor_.target; }
  const Mlp& target_critic() const { return critic_.target; }
  Mlp& actor_mut() { return actor_.live; }
  Mlp& critic_mut() { return critic_.live; }
  Mlp& target_actor_mut() { return actor_.target; }
  Mlp& target_critic_mut() { return critic_.target; }
  ReplayBuffer& buffer() { return buffer_; }

  static int actor_input_dim(const TaskSpec& spec, int history_horizon);
  // Length of the non-action prefix of the critic input (the flattened
  // global state, or the flattened joint history in non-guided mode).
  static int critic_state_dim(const TaskSpec& spec, CriticMode mode,
                              int history_horizon);
  static int critic_input_dim(const TaskSpec& spec, CriticMode mode,
                              int history_horizon);

  std::vector<double> critic_input(
      const GlobalState& state,
      const std::vector<std::vector<double>>& histories,
      std::span<const AgentAction> actions) const;

  // y = r + gamma * Q'(s', [mu'(h'^1), ..., mu'(h'^M)]) per transition.
  std::vector<double> critic_targets(
      const std::vector<const Transition*>& batch) const;

  // Gradient of 0.5 * mean((Q - y)^2); loss_out receives mean((Q - y)^2).
  MlpGrad critic_gradient(const std::vector<const Transition*>& batch,
                          double* loss_out = nullptr) const;

  // One Adam descent step on the Bellman error; returns the pre-update loss.
  double critic_update(const std::vector<const Transition*>& batch);

  // Ascent gradient of mean_batch sum_agents Q(s, [mu(h^1), ..., mu(h^M)]),
  // with each per-agent action gradient passed through invert_gradient when
  // configured.
  MlpGrad actor_gradient(const std::vector<const Transition*>& batch) const;

  // One Adam ascent step on the shared actor.
  void actor_update(const std::vector<const Transition*>& batch);

  void soft_update_targets();

  // Raw (unclamped) actor output for a flattened history.
  AgentAction policy_action(const std::vector<double>& history_flat) const;

  // Adds clamped Gaussian exploration noise.
  AgentAction explore(const AgentAction& a, Rng& rng) const;

  using EvalHook = std::function<void(const MetricsRow&, const Trainer&)>;

  // Runs `episodes` episodes: every environment step stores one transition
  // and, after warm-up, performs the configured number of critic + actor
  // updates and soft target updates. Noise-free evaluations are logged every
  // eval_every_episodes episodes and at the final episode.
  TrainResult train(int episodes, const EvalHook& on_eval = {});

 private:
  std::vector<double> flatten_state(const GlobalState& state) const;

  TaskSpec spec_;
  TrainerConfig cfg_;
  TargetPair critic_;
  TargetPair actor_;
  AdamState critic_opt_;
  AdamState actor_opt_;
  ReplayBuffer buffer_;
  Rng noise_rng_;
  Rng sample_rng_;
  std::uint64_t seed_;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& log);

}  // namespace swarm
