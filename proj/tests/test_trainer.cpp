#include <doctest.h>

#include "oracles.hpp"
#include "swarmrl/trainer.hpp"

using namespace swarm;

namespace {

TrainerConfig tiny_config() {
  TrainerConfig cfg;
  cfg.critic_hidden = {8, 8};
  cfg.actor_hidden = {8, 8};
  cfg.history_horizon = 2;
  cfg.batch_size = 4;
  cfg.warmup_transitions = 4;
  cfg.eval_every_episodes = 1;
  cfg.eval_runs = 2;
  return cfg;
}

std::vector<Transition> synth_transitions(const TaskSpec& spec, int horizon,
                                          int n, Rng& rng) {
  int hist_dim = Trainer::actor_input_dim(spec, horizon);
  std::vector<Transition> out(n);
  for (int k = 0; k < n; ++k) {
    Transition& t = out[k];
    t.state = reset(spec, rng.next_u64());
    t.next_state = reset(spec, rng.next_u64());
    t.histories.resize(spec.agents);
    t.next_histories.resize(spec.agents);
    t.actions.resize(spec.agents);
    for (int i = 0; i < spec.agents; ++i) {
      t.histories[i].resize(hist_dim);
      t.next_histories[i].resize(hist_dim);
      for (double& v : t.histories[i]) v = rng.uniform(-1.0, 1.0);
      for (double& v : t.next_histories[i]) v = rng.uniform(-1.0, 1.0);
      t.actions[i] = {rng.uniform(0.0, 1.0), rng.uniform(-kPi, kPi)};
    }
    t.reward = rng.uniform(-1.0, 4.0);
  }
  return out;
}

std::vector<const Transition*> as_batch(const std::vector<Transition>& ts) {
  std::vector<const Transition*> batch(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) batch[i] = &ts[i];
  return batch;
}

void zero_net(Mlp& net) {
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : net.biases) std::fill(b.begin(), b.end(), 0.0);
}

}  // namespace

TEST_CASE("input dimensions follow the task and critic mode") {
  TaskSpec g4 = TaskSpec::graph(4);
  CHECK(Trainer::actor_input_dim(g4, 10) == 230);
  CHECK(Trainer::critic_state_dim(g4, CriticMode::guided, 10) == 12);
  CHECK(Trainer::critic_input_dim(g4, CriticMode::guided, 10) == 20);
  CHECK(Trainer::critic_state_dim(g4, CriticMode::non_guided, 10) == 920);
  CHECK(Trainer::critic_input_dim(g4, CriticMode::non_guided, 10) == 928);

  TaskSpec l3 = TaskSpec::localization(3);
  CHECK(Trainer::actor_input_dim(l3, 10) == 260);
  CHECK(Trainer::critic_state_dim(l3, CriticMode::guided, 10) == 14);
  CHECK(Trainer::critic_input_dim(l3, CriticMode::guided, 10) == 20);

  TaskSpec base = TaskSpec::localization(1);
  base.obs_mode = ObservationMode::no_comm;
  CHECK(Trainer::actor_input_dim(base, 10) == 40);
}

TEST_CASE("critic input layout in both modes") {
  TaskSpec spec = TaskSpec::localization(2);
  TrainerConfig cfg = tiny_config();
  Trainer guided(spec, cfg, 1);

  GlobalState s;
  s.world = spec.world;
  s.poses = {{1, 2, 0.5}, {-3, 4, -0.25}};
  s.found = {1, 0};
  s.target = {7.0, -8.0};
  std::vector<std::vector<double>> hists(2);
  int hist_dim = Trainer::actor_input_dim(spec, cfg.history_horizon);
  hists[0].assign(hist_dim, 0.25);
  hists[1].assign(hist_dim, -0.5);
  std::vector<AgentAction> actions{{0.5, 0.1}, {1.0, -1.0}};

  std::vector<double> in = guided.critic_input(s, hists, actions);
  REQUIRE(static_cast<int>(in.size()) ==
          Trainer::critic_input_dim(spec, CriticMode::guided, cfg.history_horizon));
  CHECK(in[0] == 1.0);
  CHECK(in[3] == 1.0);   // found bit of agent 0
  CHECK(in[7] == 0.0);   // found bit of agent 1
  CHECK(in[8] == 7.0);   // target x
  CHECK(in[9] == -8.0);
  CHECK(in[10] == 0.5);  // first action
  CHECK(in[13] == -1.0);

  cfg.critic_mode = CriticMode::non_guided;
  Trainer blind(spec, cfg, 1);
  std::vector<double> nin = blind.critic_input(s, hists, actions);
  REQUIRE(static_cast<int>(nin.size()) == 2 * hist_dim + 4);
  CHECK(nin[0] == 0.25);
  CHECK(nin[hist_dim] == -0.5);
  CHECK(nin[2 * hist_dim] == 0.5);
  CHECK(nin[2 * hist_dim + 3] == -1.0);
}

TEST_CASE("critic targets follow the bootstrap formula") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  Rng rng(51);
  std::vector<Transition> ts = synth_transitions(spec, cfg.history_horizon, 5, rng);

  SUBCASE("gamma zero is myopic") {
    cfg.gamma = 0.0;
    Trainer trainer(spec, cfg, 2);
    std::vector<double> y = trainer.critic_targets(as_batch(ts));
    for (std::size_t b = 0; b < ts.size(); ++b) CHECK(y[b] == ts[b].reward);
  }

  SUBCASE("zero target critic bootstraps nothing") {
    cfg.gamma = 0.99;
    Trainer trainer(spec, cfg, 2);
    zero_net(trainer.target_critic_mut());
    std::vector<double> y = trainer.critic_targets(as_batch(ts));
    for (std::size_t b = 0; b < ts.size(); ++b) CHECK(y[b] == ts[b].reward);
  }

  SUBCASE("constant target critic output 2 with r=1") {
    cfg.gamma = 0.99;
    Trainer trainer(spec, cfg, 2);
    zero_net(trainer.target_critic_mut());
    trainer.target_critic_mut().biases.back()[0] = 2.0;
    std::vector<Transition> one = {ts[0]};
    one[0].reward = 1.0;
    std::vector<double> y = trainer.critic_targets(as_batch(one));
    CHECK(y[0] == doctest::Approx(2.98).epsilon(1e-15));
  }

  SUBCASE("non-finite reward aborts with diagnostics") {
    Trainer trainer(spec, cfg, 2);
    std::vector<Transition> bad = {ts[0]};
    bad[0].reward = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(static_cast<void>(trainer.critic_targets(as_batch(bad))),
                         doctest::Contains("non-finite"), std::runtime_error);
  }
}

TEST_CASE("critic update is a fixed point when Q already equals y") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  cfg.gamma = 0.0;
  Trainer trainer(spec, cfg, 3);
  zero_net(trainer.critic_mut());

  Rng rng(52);
  std::vector<Transition> ts = synth_transitions(spec, cfg.history_horizon, 4, rng);
  for (Transition& t : ts) t.reward = 0.0;  // y = 0 = Q everywhere

  Mlp before = trainer.critic();
  double loss = trainer.critic_update(as_batch(ts));
  CHECK(loss == 0.0);
  CHECK(trainer.critic().weights == before.weights);
  CHECK(trainer.critic().biases == before.biases);
}

TEST_CASE("critic gradient matches finite differences of the half-MSE") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  Rng rng(53);
  for (std::uint64_t attempt = 0;; ++attempt) {
    REQUIRE(attempt < 50);
    Trainer trainer(spec, cfg, 100 + attempt);
    std::vector<Transition> ts =
        synth_transitions(spec, cfg.history_horizon, 3, rng);
    std::vector<const Transition*> batch = as_batch(ts);

    std::vector<std::vector<double>> inputs;
    for (const Transition* t : batch)
      inputs.push_back(trainer.critic_input(t->state, t->histories, t->actions));

    bool margin_ok = true;
    for (const auto& in : inputs)
      if (oracle::min_hidden_preact_margin(trainer.critic(), in) < 1e-3)
        margin_ok = false;
    if (!margin_ok) continue;

    std::vector<double> y = trainer.critic_targets(batch);
    double loss = 0.0;
    MlpGrad grad = trainer.critic_gradient(batch, &loss);
    CHECK(loss > 0.0);

    Mlp probe = trainer.critic();
    auto f = [&](const std::vector<double>& params) {
      oracle::unflatten_params(probe, params);
      double acc = 0.0;
      for (std::size_t b = 0; b < inputs.size(); ++b) {
        double q = probe.forward(inputs[b])[0];
        acc += 0.5 * (q - y[b]) * (q - y[b]);
      }
      return acc / static_cast<double>(inputs.size());
    };
    std::vector<double> fd =
        oracle::fd_gradient(f, oracle::flatten_params(trainer.critic()));
    CHECK(oracle::max_rel_error(oracle::flatten_grad(grad), fd) <= 1e-5);
    break;
  }
}

TEST_CASE("single-transition critic gradient is (Q - y) grad Q") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  Trainer trainer(spec, cfg, 4);
  Rng rng(62);
  std::vector<Transition> ts = synth_transitions(spec, cfg.history_horizon, 1, rng);
  std::vector<const Transition*> batch = as_batch(ts);

  double loss = 0.0;
  MlpGrad got = trainer.critic_gradient(batch, &loss);

  double y = trainer.critic_targets(batch)[0];
  std::vector<double> input =
      trainer.critic_input(ts[0].state, ts[0].histories, ts[0].actions);
  ForwardCache cache;
  double q = forward(trainer.critic(), input, cache)[0];
  MlpGrad grad_q = zero_grad_like(trainer.critic());
  double one[1] = {1.0};
  backward(trainer.critic(), cache, one, grad_q);
  grad_q.scale(q - y);

  CHECK(loss == (q - y) * (q - y));
  // scaling after backward associates the products differently, so compare
  // to rounding rather than bitwise
  CHECK(oracle::max_rel_error(oracle::flatten_grad(got),
                              oracle::flatten_grad(grad_q)) < 1e-14);
}

TEST_CASE("repeated critic updates on a frozen batch descend") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  cfg.critic_lr = 1e-4;
  Trainer trainer(spec, cfg, 5);
  Rng rng(54);
  std::vector<Transition> ts = synth_transitions(spec, cfg.history_horizon, 8, rng);
  std::vector<const Transition*> batch = as_batch(ts);

  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    double loss = trainer.critic_update(batch);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
  }
}

TEST_CASE("actor update is a no-op under an action-blind critic") {
  TaskSpec spec = TaskSpec::graph(3);
  TrainerConfig cfg = tiny_config();
  Trainer trainer(spec, cfg, 6);
  zero_net(trainer.critic_mut());  // Q is constant in everything

  Rng rng(55);
  std::vector<Transition> ts = synth_transitions(spec, cfg.history_horizon, 4, rng);
  Mlp before = trainer.actor();
  trainer.actor_update(as_batch(ts));
  CHECK(trainer.actor().weights == before.weights);
  CHECK(trainer.actor().biases == before.biases);
}

TEST_CASE("actor gradient matches finite differences of the joint objective") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  cfg.invert_action_gradients = false;  // FD of the raw composite objective
  Rng rng(56);
  for (std::uint64_t attempt = 0;; ++attempt) {
    REQUIRE(attempt < 50);
    Trainer trainer(spec, cfg, 200 + attempt);
    std::vector<Transition> ts =
        synth_transitions(spec, cfg.history_horizon, 2, rng);
    std::vector<const Transition*> batch = as_batch(ts);

    bool margin_ok = true;
    for (const Transition* t : batch) {
      std::vector<AgentAction> acts(spec.agents);
      for (int i = 0; i < spec.agents; ++i) {
        std::vector<double> a = trainer.actor().forward(t->histories[i]);
        acts[i] = {a[0], a[1]};
        if (oracle::min_hidden_preact_margin(trainer.actor(), t->histories[i]) <
            1e-3)
          margin_ok = false;
      }
      std::vector<double> cin = trainer.critic_input(t->state, t->histories, acts);
      if (oracle::min_hidden_preact_margin(trainer.critic(), cin) < 1e-3)
        margin_ok = false;
    }
    if (!margin_ok) continue;

    MlpGrad grad = trainer.actor_gradient(batch);

    Mlp probe = trainer.actor();
    auto objective = [&](const std::vector<double>& params) {
      oracle::unflatten_params(probe, params);
      double acc = 0.0;
      for (const Transition* t : batch) {
        std::vector<AgentAction> acts(spec.agents);
        for (int i = 0; i < spec.agents; ++i) {
          std::vector<double> a = probe.forward(t->histories[i]);
          acts[i] = {a[0], a[1]};
        }
        std::vector<double> cin =
            trainer.critic_input(t->state, t->histories, acts);
        acc += trainer.critic().forward(cin)[0];
      }
      return acc / static_cast<double>(batch.size());
    };
    std::vector<double> fd =
        oracle::fd_gradient(objective, oracle::flatten_params(trainer.actor()));
    CHECK(oracle::max_rel_error(oracle::flatten_grad(grad), fd) <= 1e-5);
    break;
  }
}

TEST_CASE("exploration noise is clamped Gaussian") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();

  SUBCASE("zero stddev is the identity inside the bounds") {
    cfg.noise_speed = 0.0;
    cfg.noise_turn = 0.0;
    Trainer trainer(spec, cfg, 7);
    Rng rng(57);
    AgentAction a = trainer.explore({0.5, -1.0}, rng);
    CHECK(a.speed == 0.5);
    CHECK(a.turn == -1.0);
  }

  SUBCASE("bounds always hold") {
    cfg.noise_speed = 10.0;
    cfg.noise_turn = 10.0;
    Trainer trainer(spec, cfg, 7);
    Rng rng(58);
    for (int k = 0; k < 2000; ++k) {
      AgentAction a = trainer.explore({1.0, 0.0}, rng);
      CHECK(a.speed >= 0.0);
      CHECK(a.speed <= 1.0);
      CHECK(a.turn >= -kPi);
      CHECK(a.turn <= kPi);
    }
  }

  SUBCASE("sample mean stays near the base action") {
    Trainer trainer(spec, cfg, 7);
    Rng rng(59);
    double sum = 0.0;
    int n = 100000;
    for (int k = 0; k < n; ++k) sum += trainer.explore({0.5, 0.0}, rng).speed;
    double sigma_mean = cfg.noise_speed / std::sqrt(n);
    CHECK(std::abs(sum / n - 0.5) < 3.0 * sigma_mean);
  }
}

TEST_CASE("one shared actor: identical histories give identical actions") {
  TaskSpec spec = TaskSpec::graph(4);
  Trainer trainer(spec, tiny_config(), 8);
  Rng rng(60);
  std::vector<double> h(Trainer::actor_input_dim(spec, 2));
  for (double& v : h) v = rng.uniform(-1.0, 1.0);
  AgentAction a = trainer.policy_action(h);
  AgentAction b = trainer.policy_action(h);
  CHECK(a.speed == b.speed);
  CHECK(a.turn == b.turn);
}

TEST_CASE("target network is the exact exponential average of the live path") {
  Mlp scalar;
  scalar.widths = {1, 1, 1};
  scalar.weights = {{0.1}, {-0.2}};
  scalar.biases = {{0.0}, {0.3}};
  TargetPair pair = make_target_pair(scalar, 0.25);

  double expected = pair.target.weights[0][0];
  Rng rng(61);
  for (int k = 0; k < 50; ++k) {
    double live = rng.uniform(-1.0, 1.0);
    pair.live.weights[0][0] = live;
    soft_update(pair);
    expected = 0.25 * live + (1.0 - 0.25) * expected;
    CHECK(pair.target.weights[0][0] == expected);
  }
}

TEST_CASE("training is deterministic per seed and episodes=0 is empty") {
  TaskSpec spec = TaskSpec::graph(2);
  spec.episode_steps = 15;
  TrainerConfig cfg = tiny_config();
  cfg.warmup_transitions = 10;
  cfg.eval_runs = 3;

  Trainer a(spec, cfg, 99);
  Trainer b(spec, cfg, 99);
  TrainResult ra = a.train(3);
  TrainResult rb = b.train(3);
  REQUIRE(ra.log.size() == rb.log.size());
  REQUIRE(ra.log.size() == 3);  // eval every episode
  for (std::size_t k = 0; k < ra.log.size(); ++k) {
    CHECK(ra.log[k].episode == rb.log[k].episode);
    CHECK(ra.log[k].env_steps == rb.log[k].env_steps);
    CHECK(ra.log[k].critic_loss_mean == rb.log[k].critic_loss_mean);
    CHECK(ra.log[k].eval_return_mean == rb.log[k].eval_return_mean);
    CHECK(ra.log[k].eval_return_std == rb.log[k].eval_return_std);
  }
  CHECK(ra.actor.weights == rb.actor.weights);
  CHECK(ra.critic.weights == rb.critic.weights);
  CHECK(ra.log[2].env_steps == 45);

  Trainer c(spec, cfg, 99);
  TrainResult rc = c.train(0);
  CHECK(rc.log.empty());
  Trainer d(spec, cfg, 99);
  CHECK(rc.actor.weights == d.actor().weights);  // untouched initialization
  CHECK(rc.critic.weights == d.critic().weights);

  Trainer e(spec, cfg, 100);
  TrainResult re = e.train(3);
  CHECK(re.log[2].eval_return_mean != ra.log[2].eval_return_mean);
}

TEST_CASE("critic mode changes only the critic input construction") {
  TaskSpec spec = TaskSpec::graph(2);
  spec.episode_steps = 10;
  TrainerConfig cfg = tiny_config();
  cfg.warmup_transitions = 1000000;  // no updates: rollouts must coincide
  cfg.eval_runs = 2;

  Trainer guided(spec, cfg, 123);
  TrainerConfig blind_cfg = cfg;
  blind_cfg.critic_mode = CriticMode::non_guided;
  Trainer blind(spec, blind_cfg, 123);

  CHECK(guided.actor().weights == blind.actor().weights);
  CHECK(guided.actor().biases == blind.actor().biases);

  TrainResult rg = guided.train(2);
  TrainResult rb = blind.train(2);
  REQUIRE(rg.log.size() == rb.log.size());
  for (std::size_t k = 0; k < rg.log.size(); ++k) {
    CHECK(rg.log[k].eval_return_mean == rb.log[k].eval_return_mean);
    CHECK(rg.log[k].eval_return_std == rb.log[k].eval_return_std);
  }
  CHECK(rg.actor.weights == rb.actor.weights);
}

TEST_CASE("trainer validates its configuration") {
  TaskSpec spec = TaskSpec::graph(2);
  TrainerConfig cfg = tiny_config();
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(Trainer(spec, cfg, 1), std::invalid_argument);
  cfg = tiny_config();
  cfg.warmup_transitions = 1;  // below batch size
  CHECK_THROWS_AS(Trainer(spec, cfg, 1), std::invalid_argument);
  cfg = tiny_config();
  cfg.tau = 0.0;
  CHECK_THROWS_AS(Trainer(spec, cfg, 1), std::invalid_argument);
}
