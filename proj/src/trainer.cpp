#include "swarmrl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "swarmrl/fmt.hpp"

namespace swarm {

namespace {

// sub-seed streams derived from the trainer seed
constexpr std::uint64_t kStreamCriticInit = 0;
constexpr std::uint64_t kStreamActorInit = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamSample = 3;
constexpr std::uint64_t kStreamEpisode = 4;
constexpr std::uint64_t kStreamEval = 5;

}  // namespace

void TrainerConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("gamma must lie in [0, 1)");
  if (critic_lr <= 0.0 || actor_lr <= 0.0)
    throw std::invalid_argument("learning rates must be positive");
  if (tau <= 0.0 || tau > 1.0)
    throw std::invalid_argument("tau must lie in (0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (warmup_transitions < batch_size)
    throw std::invalid_argument("warmup_transitions must be >= batch_size");
  if (replay_capacity < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("replay_capacity must be >= batch_size");
  if (noise_speed < 0.0 || noise_turn < 0.0)
    throw std::invalid_argument("noise stddevs must be >= 0");
  if (updates_per_step < 0)
    throw std::invalid_argument("updates_per_step must be >= 0");
  if (critic_hidden.empty() || actor_hidden.empty())
    throw std::invalid_argument("networks need at least one hidden layer");
  if (critic_output_init <= 0.0 || actor_output_init <= 0.0)
    throw std::invalid_argument("output init bounds must be positive");
  if (history_horizon < 1)
    throw std::invalid_argument("history_horizon must be >= 1");
  if (eval_every_episodes < 1 || eval_runs < 1 || eval_jobs < 1)
    throw std::invalid_argument("evaluation settings must be >= 1");
}

int Trainer::actor_input_dim(const TaskSpec& spec, int history_horizon) {
  return history_horizon * (spec.observation_dim() + 2);
}

int Trainer::critic_state_dim(const TaskSpec& spec, CriticMode mode,
                              int history_horizon) {
  if (mode == CriticMode::non_guided)
    return spec.agents * actor_input_dim(spec, history_horizon);
  if (spec.kind == TaskKind::localization) return 4 * spec.agents + 2;
  return 3 * spec.agents;
}

int Trainer::critic_input_dim(const TaskSpec& spec, CriticMode mode,
                              int history_horizon) {
  return critic_state_dim(spec, mode, history_horizon) + 2 * spec.agents;
}

namespace {

std::vector<int> full_widths(int input, const std::vector<int>& hidden,
                             int output) {
  std::vector<int> widths;
  widths.reserve(hidden.size() + 2);
  widths.push_back(input);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output);
  return widths;
}

}  // namespace

Trainer::Trainer(TaskSpec spec, TrainerConfig cfg, std::uint64_t seed)
    : spec_(std::move(spec)),
      cfg_(std::move(cfg)),
      buffer_(cfg_.replay_capacity),
      noise_rng_(derive_seed(seed, kStreamNoise)),
      sample_rng_(derive_seed(seed, kStreamSample)),
      seed_(seed) {
  spec_.validate();
  cfg_.validate();

  Rng critic_rng(derive_seed(seed, kStreamCriticInit));
  Rng actor_rng(derive_seed(seed, kStreamActorInit));
  int critic_in = critic_input_dim(spec_, cfg_.critic_mode, cfg_.history_horizon);
  int actor_in = actor_input_dim(spec_, cfg_.history_horizon);
  critic_ = make_target_pair(
      init_mlp(full_widths(critic_in, cfg_.critic_hidden, 1),
               cfg_.critic_output_init, critic_rng),
      cfg_.tau);
  actor_ = make_target_pair(
      init_mlp(full_widths(actor_in, cfg_.actor_hidden, 2),
               cfg_.actor_output_init, actor_rng),
      cfg_.tau);
  critic_opt_ = make_adam(critic_.live, cfg_.critic_lr);
  actor_opt_ = make_adam(actor_.live, cfg_.actor_lr);
}

std::vector<double> Trainer::flatten_state(const GlobalState& state) const {
  std::vector<double> flat;
  if (spec_.kind == TaskKind::localization) {
    flat.reserve(4 * state.agent_count() + 2);
    for (int i = 0; i < state.agent_count(); ++i) {
      flat.push_back(state.poses[i].x);
      flat.push_back(state.poses[i].y);
      flat.push_back(state.poses[i].phi);
      flat.push_back(static_cast<double>(state.found[i]));
    }
    flat.push_back(state.target.x);
    flat.push_back(state.target.y);
  } else {
    flat.reserve(3 * state.agent_count());
    for (int i = 0; i < state.agent_count(); ++i) {
      flat.push_back(state.poses[i].x);
      flat.push_back(state.poses[i].y);
      flat.push_back(state.poses[i].phi);
    }
  }
  return flat;
}

std::vector<double> Trainer::critic_input(
    const GlobalState& state, const std::vector<std::vector<double>>& histories,
    std::span<const AgentAction> actions) const {
  std::vector<double> input;
  if (cfg_.critic_mode == CriticMode::guided) {
    input = flatten_state(state);
  } else {
    input.reserve(
        critic_input_dim(spec_, cfg_.critic_mode, cfg_.history_horizon));
    for (const auto& h : histories) input.insert(input.end(), h.begin(), h.end());
  }
  for (const AgentAction& a : actions) {
    input.push_back(a.speed);
    input.push_back(a.turn);
  }
  return input;
}

std::vector<double> Trainer::critic_targets(
    const std::vector<const Transition*>& batch) const {
  std::vector<double> targets(batch.size());
  std::vector<AgentAction> next_actions(spec_.agents);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    for (int i = 0; i < spec_.agents; ++i) {
      std::vector<double> a = actor_.target.forward(t.next_histories[i]);
      next_actions[i] = {a[0], a[1]};
    }
    std::vector<double> input =
        critic_input(t.next_state, t.next_histories, next_actions);
    double q = critic_.target.forward(input)[0];
    targets[b] = t.reward + cfg_.gamma * q;
    if (!std::isfinite(targets[b]))
      throw std::runtime_error(
          fmt_str("non-finite critic target %g (r=%g q=%g)", targets[b],
                  t.reward, q));
  }
  return targets;
}

MlpGrad Trainer::critic_gradient(const std::vector<const Transition*>& batch,
                                 double* loss_out) const {
  if (batch.empty()) throw std::invalid_argument("empty critic batch");
  std::vector<double> targets = critic_targets(batch);
  MlpGrad grad = zero_grad_like(critic_.live);
  ForwardCache cache;
  double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    std::vector<double> input = critic_input(t.state, t.histories, t.actions);
    double q = forward(critic_.live, input, cache)[0];
    double diff = q - targets[b];
    loss += diff * diff;
    double upstream[1] = {diff * inv_batch};
    backward(critic_.live, cache, upstream, grad);
  }
  loss *= inv_batch;
  if (loss_out) *loss_out = loss;
  return grad;
}

double Trainer::critic_update(const std::vector<const Transition*>& batch) {
  double loss = 0.0;
  MlpGrad grad = critic_gradient(batch, &loss);
  if (!std::isfinite(loss))
    throw std::runtime_error(fmt_str("non-finite critic loss %g", loss));
  adam_step(critic_opt_, critic_.live, grad);
  return loss;
}

MlpGrad Trainer::actor_gradient(
    const std::vector<const Transition*>& batch) const {
  if (batch.empty()) throw std::invalid_argument("empty actor batch");
  MlpGrad grad = zero_grad_like(actor_.live);
  MlpGrad critic_scratch = zero_grad_like(critic_.live);  // values unused
  std::vector<ForwardCache> actor_caches(spec_.agents);
  ForwardCache critic_cache;
  std::vector<AgentAction> actions(spec_.agents);
  int action_offset =
      critic_state_dim(spec_, cfg_.critic_mode, cfg_.history_horizon);
  double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const Transition* tp : batch) {
    const Transition& t = *tp;
    for (int i = 0; i < spec_.agents; ++i) {
      std::vector<double> a =
          forward(actor_.live, t.histories[i], actor_caches[i]);
      actions[i] = {a[0], a[1]};
    }
    std::vector<double> input = critic_input(t.state, t.histories, actions);
    forward(critic_.live, input, critic_cache);
    double upstream[1] = {1.0};
    std::vector<double> input_grad =
        backward(critic_.live, critic_cache, upstream, critic_scratch);

    for (int i = 0; i < spec_.agents; ++i) {
      double g_speed = input_grad[action_offset + 2 * i];
      double g_turn = input_grad[action_offset + 2 * i + 1];
      if (cfg_.invert_action_gradients) {
        g_speed = invert_gradient(g_speed, actions[i].speed, 0.0, 1.0);
        g_turn = invert_gradient(g_turn, actions[i].turn, -kPi, kPi);
      }
      double up[2] = {g_speed * inv_batch, g_turn * inv_batch};
      backward(actor_.live, actor_caches[i], up, grad);
    }
  }
  return grad;
}

void Trainer::actor_update(const std::vector<const Transition*>& batch) {
  MlpGrad grad = actor_gradient(batch);
  grad.scale(-1.0);  // ascend the objective
  adam_step(actor_opt_, actor_.live, grad);
}

void Trainer::soft_update_targets() {
  soft_update(critic_);
  soft_update(actor_);
}

AgentAction Trainer::policy_action(
    const std::vector<double>& history_flat) const {
  std::vector<double> out = actor_.live.forward(history_flat);
  return {out[0], out[1]};
}

AgentAction Trainer::explore(const AgentAction& a, Rng& rng) const {
  AgentAction noisy{a.speed + rng.normal(0.0, cfg_.noise_speed),
                    a.turn + rng.normal(0.0, cfg_.noise_turn)};
  return clamp_action(noisy);
}

TrainResult Trainer::train(int episodes, const EvalHook& on_eval) {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  auto start = std::chrono::steady_clock::now();
  TrainResult result;
  long env_steps = 0;
  double loss_sum = 0.0;
  long loss_count = 0;
  int obs_dim = spec_.observation_dim();

  for (int ep = 1; ep <= episodes; ++ep) {
    Rng env_rng(derive_seed(derive_seed(seed_, kStreamEpisode), ep));
    GlobalState state = reset(spec_, env_rng);
    std::vector<AgentHistory> histories(
        spec_.agents, AgentHistory(cfg_.history_horizon, obs_dim));

    for (int t = 1; t <= spec_.episode_steps; ++t) {
      Transition tr;
      tr.actions.resize(spec_.agents);
      tr.histories.resize(spec_.agents);
      for (int i = 0; i < spec_.agents; ++i) {
        tr.histories[i] = histories[i].flattened();
        tr.actions[i] = explore(policy_action(tr.histories[i]), noise_rng_);
      }
      StepResult sr = step(state, tr.actions, spec_);
      ++env_steps;

      tr.next_histories.resize(spec_.agents);
      for (int i = 0; i < spec_.agents; ++i) {
        histories[i].push(observe(sr.state, i, spec_), tr.actions[i]);
        tr.next_histories[i] = histories[i].flattened();
      }
      tr.state = std::move(state);
      tr.next_state = sr.state;
      tr.reward = sr.reward;
      state = std::move(sr.state);
      buffer_.push(std::move(tr));

      if (buffer_.size() >= static_cast<std::size_t>(cfg_.warmup_transitions)) {
        try {
          for (int u = 0; u < cfg_.updates_per_step; ++u) {
            std::vector<const Transition*> batch =
                buffer_.sample(cfg_.batch_size, sample_rng_);
            loss_sum += critic_update(batch);
            ++loss_count;
            actor_update(batch);
            soft_update_targets();
          }
        } catch (const std::runtime_error& e) {
          throw std::runtime_error(
              fmt_str("training aborted at episode %d step %d: %s", ep, t,
                      e.what()));
        }
      }
    }

    if (ep % cfg_.eval_every_episodes == 0 || ep == episodes) {
      EvalSummary eval =
          evaluate(actor_.live, spec_, cfg_.history_horizon, cfg_.eval_runs,
                   derive_seed(derive_seed(seed_, kStreamEval), ep),
                   cfg_.eval_jobs);
      MetricsRow row;
      row.episode = ep;
      row.env_steps = env_steps;
      row.critic_loss_mean = loss_count > 0 ? loss_sum / loss_count : 0.0;
      row.eval_return_mean = eval.mean;
      row.eval_return_std = eval.stddev;
      row.wallclock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      result.log.push_back(row);
      if (on_eval) on_eval(row, *this);
      loss_sum = 0.0;
      loss_count = 0;
    }
  }

  result.actor = actor_.live;
  result.critic = critic_.live;
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& log) {
  out << "episode,env_steps,critic_loss_mean,eval_return_mean,"
         "eval_return_std,wallclock_s\n";
  for (const MetricsRow& r : log) {
    out << r.episode << ',' << r.env_steps << ',' << fmt_f64(r.critic_loss_mean)
        << ',' << fmt_f64(r.eval_return_mean) << ','
        << fmt_f64(r.eval_return_std) << ',' << fmt_f64(r.wallclock_s) << '\n';
  }
}

}  // namespace swarm
