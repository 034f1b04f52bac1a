// swarmrl command line: train policies, evaluate checkpoints, run the
// cross-evaluation grid, and train the no-communication baseline.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "swarmrl/fmt.hpp"
#include "swarmrl/harness.hpp"
#include "swarmrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace swarm;

namespace {

struct CliOptions {
  std::string task = "graph";
  int agents = 0;
  int episodes = 0;
  std::uint64_t seed = 0;
  double world_half_width = 0.0;  // 0 keeps the task default (10 / 15)
  double comm_radius = 4.0;
  int histogram_bins = 21;
  double rbf_sigma = 0.25;
  double edge_min = 1.5;
  double edge_max = 3.0;
  int episode_steps = 500;
  double action_cost = 0.05;
  std::string obs_mode = "full";
  TrainerConfig trainer;
  std::string critic_mode = "guided";
  std::string out_root;
  std::string config_file;  // expanded before parsing; kept for --help only
};

// Expands `--config FILE` into the key=value pairs stored in FILE, inserted
// in place so explicit command-line flags (parsed last) win.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("--config expects a file path");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open config file: " + file);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::size_t start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos || eq <= start)
        throw std::invalid_argument(
            fmt_str("%s:%d: expected key=value", file.c_str(), line_no));
      std::string key = line.substr(start, line.find_last_not_of(" \t", eq - 1) -
                                               start + 1);
      std::size_t vstart = line.find_first_not_of(" \t", eq + 1);
      std::string value =
          vstart == std::string::npos
              ? ""
              : line.substr(vstart, line.find_last_not_of(" \t") - vstart + 1);
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
      if (key == "config")
        throw std::invalid_argument(file + ": config files cannot nest");
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  return out;
}

void parse_reversed(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  app.parse(std::move(args));
}

void add_task_options(CLI::App* cmd, CliOptions& o, bool require_agents) {
  cmd->add_option("--task", o.task, "Task: graph or localization")
      ->check(CLI::IsMember({"graph", "localization"}))
      ->capture_default_str();
  auto* agents = cmd->add_option("--agents", o.agents, "Swarm size M");
  if (require_agents) agents->required();
  cmd->add_option("--world-half-width", o.world_half_width,
                  "World half width (0 keeps the task default)")
      ->capture_default_str();
  cmd->add_option("--comm-radius", o.comm_radius, "Communication radius d")
      ->capture_default_str();
  cmd->add_option("--histogram-bins", o.histogram_bins,
                  "Distance histogram bins K")
      ->capture_default_str();
  cmd->add_option("--rbf-sigma", o.rbf_sigma, "Histogram RBF width")
      ->capture_default_str();
  cmd->add_option("--edge-min", o.edge_min, "Graph task edge band lower bound")
      ->capture_default_str();
  cmd->add_option("--edge-max", o.edge_max, "Graph task edge band upper bound")
      ->capture_default_str();
  cmd->add_option("--episode-steps", o.episode_steps, "Episode length T")
      ->capture_default_str();
  cmd->add_option("--action-cost", o.action_cost, "Action cost coefficient")
      ->capture_default_str();
  cmd->add_option("--obs-mode", o.obs_mode,
                  "Observation mode: full or no_comm")
      ->check(CLI::IsMember({"full", "no_comm"}))
      ->capture_default_str();
}

void add_trainer_options(CLI::App* cmd, CliOptions& o) {
  TrainerConfig& t = o.trainer;
  cmd->add_option("--gamma", t.gamma, "Discount factor")->capture_default_str();
  cmd->add_option("--critic-lr", t.critic_lr, "Critic learning rate")
      ->capture_default_str();
  cmd->add_option("--actor-lr", t.actor_lr, "Actor learning rate")
      ->capture_default_str();
  cmd->add_option("--tau", t.tau, "Soft target update rate")
      ->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size, "Minibatch size")
      ->capture_default_str();
  cmd->add_option("--warmup", t.warmup_transitions,
                  "Transitions gathered before updates start")
      ->capture_default_str();
  cmd->add_option("--replay-capacity", t.replay_capacity,
                  "Replay buffer capacity")
      ->capture_default_str();
  cmd->add_option("--noise-speed", t.noise_speed,
                  "Exploration noise stddev on the speed action")
      ->capture_default_str();
  cmd->add_option("--noise-turn", t.noise_turn,
                  "Exploration noise stddev on the turn action")
      ->capture_default_str();
  cmd->add_option("--updates-per-step", t.updates_per_step,
                  "Gradient updates per environment step")
      ->capture_default_str();
  cmd->add_option("--critic-mode", o.critic_mode,
                  "Critic input: guided (global state) or non_guided (joint history)")
      ->check(CLI::IsMember({"guided", "non_guided"}))
      ->capture_default_str();
  cmd->add_option("--critic-hidden", t.critic_hidden,
                  "Critic hidden layer widths, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--actor-hidden", t.actor_hidden,
                  "Actor hidden layer widths, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--critic-output-init", t.critic_output_init,
                  "Critic output layer init bound")
      ->capture_default_str();
  cmd->add_option("--actor-output-init", t.actor_output_init,
                  "Actor output layer init bound")
      ->capture_default_str();
  cmd->add_option("--history-horizon", t.history_horizon,
                  "History horizon eta")
      ->capture_default_str();
  cmd->add_option("--eval-every", t.eval_every_episodes,
                  "Episodes between noise-free evaluations")
      ->capture_default_str();
  cmd->add_option("--eval-runs", t.eval_runs, "Episodes per evaluation")
      ->capture_default_str();
  cmd->add_option("--jobs", t.eval_jobs, "Parallel evaluation episodes")
      ->capture_default_str();
}

TaskSpec build_task_spec(const CliOptions& o) {
  TaskSpec spec = o.task == "localization" ? TaskSpec::localization(o.agents)
                                           : TaskSpec::graph(o.agents);
  if (o.world_half_width > 0.0) spec.world.half_width = o.world_half_width;
  spec.comm_radius = o.comm_radius;
  spec.histogram_bins = o.histogram_bins;
  spec.rbf_sigma = o.rbf_sigma;
  spec.edge_min = o.edge_min;
  spec.edge_max = o.edge_max;
  spec.episode_steps = o.episode_steps;
  spec.action_cost = o.action_cost;
  spec.obs_mode =
      o.obs_mode == "no_comm" ? ObservationMode::no_comm : ObservationMode::full;
  spec.validate();
  return spec;
}

TrainerConfig build_trainer_config(const CliOptions& o) {
  TrainerConfig cfg = o.trainer;
  cfg.critic_mode = o.critic_mode == "non_guided" ? CriticMode::non_guided
                                                  : CriticMode::guided;
  cfg.validate();
  return cfg;
}

// Resolved key=value snapshot; feeding it back through --config reproduces
// the run (the wallclock metrics column aside).
std::string config_snapshot(const CliOptions& o) {
  std::ostringstream out;
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  const TrainerConfig& t = o.trainer;
  out << "task=" << o.task << '\n'
      << "agents=" << o.agents << '\n'
      << "episodes=" << o.episodes << '\n'
      << "seed=" << o.seed << '\n'
      << "world-half-width=" << fmt_f64(o.world_half_width) << '\n'
      << "comm-radius=" << fmt_f64(o.comm_radius) << '\n'
      << "histogram-bins=" << o.histogram_bins << '\n'
      << "rbf-sigma=" << fmt_f64(o.rbf_sigma) << '\n'
      << "edge-min=" << fmt_f64(o.edge_min) << '\n'
      << "edge-max=" << fmt_f64(o.edge_max) << '\n'
      << "episode-steps=" << o.episode_steps << '\n'
      << "action-cost=" << fmt_f64(o.action_cost) << '\n'
      << "obs-mode=" << o.obs_mode << '\n'
      << "gamma=" << fmt_f64(t.gamma) << '\n'
      << "critic-lr=" << fmt_f64(t.critic_lr) << '\n'
      << "actor-lr=" << fmt_f64(t.actor_lr) << '\n'
      << "tau=" << fmt_f64(t.tau) << '\n'
      << "batch-size=" << t.batch_size << '\n'
      << "warmup=" << t.warmup_transitions << '\n'
      << "replay-capacity=" << t.replay_capacity << '\n'
      << "noise-speed=" << fmt_f64(t.noise_speed) << '\n'
      << "noise-turn=" << fmt_f64(t.noise_turn) << '\n'
      << "updates-per-step=" << t.updates_per_step << '\n'
      << "critic-mode=" << o.critic_mode << '\n'
      << "critic-hidden=" << join(t.critic_hidden) << '\n'
      << "actor-hidden=" << join(t.actor_hidden) << '\n'
      << "critic-output-init=" << fmt_f64(t.critic_output_init) << '\n'
      << "actor-output-init=" << fmt_f64(t.actor_output_init) << '\n'
      << "history-horizon=" << t.history_horizon << '\n'
      << "eval-every=" << t.eval_every_episodes << '\n'
      << "eval-runs=" << t.eval_runs << '\n'
      << "jobs=" << t.eval_jobs << '\n';
  return out.str();
}

fs::path output_root(const CliOptions& o) {
  if (!o.out_root.empty()) return o.out_root;
  if (const char* env = std::getenv("SWARMRL_OUT")) return env;
  return "runs";
}

fs::path make_run_dir(const CliOptions& o) {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  fs::path root = output_root(o);
  fs::path dir = root / fmt_str("%s-seed%llu", stamp,
                                static_cast<unsigned long long>(o.seed));
  for (int k = 2; fs::exists(dir); ++k)
    dir = root / fmt_str("%s-seed%llu-%d", stamp,
                         static_cast<unsigned long long>(o.seed), k);
  fs::create_directories(dir);
  return dir;
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.episode << ',' << r.env_steps << ',' << fmt_f64(r.critic_loss_mean)
      << ',' << fmt_f64(r.eval_return_mean) << ',' << fmt_f64(r.eval_return_std)
      << ',' << fmt_f64(r.wallclock_s) << '\n';
}

int run_training(const TaskSpec& spec, const TrainerConfig& cfg,
                 const CliOptions& o, bool baseline) {
  fs::path dir = make_run_dir(o);
  {
    std::ofstream snap(dir / "config.ini");
    snap << config_snapshot(o);
  }
  std::ofstream metrics(dir / "metrics.csv");
  metrics << "episode,env_steps,critic_loss_mean,eval_return_mean,"
             "eval_return_std,wallclock_s\n";
  metrics.flush();

  auto on_eval = [&](const MetricsRow& row, const Trainer& trainer) {
    write_metrics_row(metrics, row);
    metrics.flush();
    save_checkpoint(trainer.actor(), trainer.config().tau,
                    dir / fmt_str("actor_ep%06d.ckpt", row.episode));
    save_checkpoint(trainer.critic(), trainer.config().tau,
                    dir / fmt_str("critic_ep%06d.ckpt", row.episode));
    std::cout << "episode " << row.episode << " eval_return_mean "
              << row.eval_return_mean << " +- " << row.eval_return_std
              << std::endl;
  };

  TrainResult result;
  if (baseline) {
    BaselineResult b = no_comm_baseline(spec, cfg, o.episodes, cfg.eval_runs,
                                        o.seed, on_eval);
    result = std::move(b.training);
    std::cout << "baseline final_eval_mean " << b.final_eval.mean << std::endl;
  } else {
    Trainer trainer(spec, cfg, o.seed);
    result = trainer.train(o.episodes, on_eval);
  }

  save_checkpoint(result.actor, cfg.tau, dir / "actor.ckpt");
  save_checkpoint(result.critic, cfg.tau, dir / "critic.ckpt");
  std::cout << "run_dir " << dir.string() << std::endl;
  return 0;
}

// Reads a run directory's config snapshot back through the same option
// schema the train command uses.
CliOptions load_run_config(const fs::path& dir) {
  fs::path config = dir / "config.ini";
  if (!fs::exists(config))
    throw std::invalid_argument("no config.ini in run dir " + dir.string());
  CliOptions o;
  CLI::App app("snapshot");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_task_options(&app, o, false);
  add_trainer_options(&app, o);
  app.add_option("--episodes", o.episodes);
  app.add_option("--seed", o.seed);
  app.add_option("--out", o.out_root);
  try {
    parse_reversed(app, expand_config_args({"--config", config.string()}));
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument("bad config snapshot " + config.string() +
                                ": " + e.what());
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided swarm policy training and evaluation"};
  app.require_subcommand(1);

  CliOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Train a policy");
  train->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_task_options(train, train_opts, true);
  add_trainer_options(train, train_opts);
  train->add_option("--episodes", train_opts.episodes, "Training episodes")
      ->required();
  train->add_option("--seed", train_opts.seed, "Master RNG seed")->required();
  train->add_option("--out", train_opts.out_root,
                    "Output root (default $SWARMRL_OUT or ./runs)");
  train->add_option("--config", train_opts.config_file,
                    "Key-value config file; command-line flags override");

  struct {
    std::string checkpoint;
    int runs = 50;
    std::uint64_t seed = 0;
    int history_horizon = 10;
    std::string returns_file, trajectory_file;
    int jobs = 1;
  } eval_opts;
  CliOptions eval_task_opts;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate an actor checkpoint");
  eval->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_task_options(eval, eval_task_opts, true);
  eval->add_option("--checkpoint", eval_opts.checkpoint, "Actor checkpoint")
      ->required();
  eval->add_option("--runs", eval_opts.runs, "Evaluation episodes")
      ->capture_default_str();
  eval->add_option("--seed", eval_opts.seed, "Evaluation seed")->required();
  eval->add_option("--history-horizon", eval_opts.history_horizon,
                   "History horizon eta")
      ->capture_default_str();
  eval->add_option("--returns", eval_opts.returns_file,
                   "Write per-run returns CSV here");
  eval->add_option("--trajectories", eval_opts.trajectory_file,
                   "Write per-step trajectory CSV here");
  eval->add_option("--jobs", eval_opts.jobs, "Parallel evaluation episodes")
      ->capture_default_str();

  struct {
    std::vector<std::string> run_dirs;
    std::vector<int> eval_agents;
    int runs = 50;
    std::uint64_t seed = 0;
    std::string output;
    int jobs = 1;
  } cross_opts;
  CLI::App* cross = app.add_subcommand(
      "cross-eval", "Evaluate trained policies across swarm sizes");
  cross->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cross->add_option("--run-dir", cross_opts.run_dirs,
                    "Run directory with actor.ckpt + config.ini (repeatable)")
      ->required();
  cross->add_option("--eval-agents", cross_opts.eval_agents,
                    "Swarm sizes to evaluate on, comma separated")
      ->delimiter(',')
      ->required();
  cross->add_option("--runs", cross_opts.runs, "Episodes per grid cell")
      ->capture_default_str();
  cross->add_option("--seed", cross_opts.seed, "Evaluation seed")->required();
  cross->add_option("--output", cross_opts.output,
                    "CSV output path (default stdout)");
  cross->add_option("--jobs", cross_opts.jobs, "Parallel evaluation episodes")
      ->capture_default_str();

  CliOptions base_opts;
  base_opts.task = "localization";
  base_opts.agents = 1;
  base_opts.obs_mode = "no_comm";
  CLI::App* baseline = app.add_subcommand(
      "baseline", "Train the single-agent no-communication localization baseline");
  baseline->option_defaults()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  add_trainer_options(baseline, base_opts);
  baseline->add_option("--episodes", base_opts.episodes, "Training episodes")
      ->required();
  baseline->add_option("--seed", base_opts.seed, "Master RNG seed")->required();
  baseline->add_option("--episode-steps", base_opts.episode_steps,
                       "Episode length T")
      ->capture_default_str();
  baseline->add_option("--out", base_opts.out_root,
                       "Output root (default $SWARMRL_OUT or ./runs)");
  baseline->add_option("--config", base_opts.config_file,
                       "Key-value config file; command-line flags override");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    parse_reversed(app, expand_config_args(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }

  try {
    if (train->parsed()) {
      TaskSpec spec = build_task_spec(train_opts);
      TrainerConfig cfg = build_trainer_config(train_opts);
      return run_training(spec, cfg, train_opts, false);
    }

    if (eval->parsed()) {
      if (!fs::exists(eval_opts.checkpoint))
        throw std::invalid_argument("checkpoint not found: " +
                                    eval_opts.checkpoint);
      TaskSpec spec = build_task_spec(eval_task_opts);
      Checkpoint ckpt;
      try {
        ckpt = load_checkpoint(eval_opts.checkpoint);
      } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
      }
      EvalSummary s = evaluate(ckpt.net, spec, eval_opts.history_horizon,
                               eval_opts.runs, eval_opts.seed, eval_opts.jobs);
      if (!eval_opts.returns_file.empty()) {
        std::ofstream out(eval_opts.returns_file);
        write_returns_csv(out, s);
      }
      if (!eval_opts.trajectory_file.empty()) {
        TrajectoryWriter traj(eval_opts.trajectory_file, spec);
        for (int r = 0; r < eval_opts.runs; ++r)
          run_episode(ckpt.net, spec, eval_opts.history_horizon,
                      derive_seed(eval_opts.seed, r), &traj, r);
      }
      if (eval_opts.runs == 1)
        std::cout << fmt_f64(s.mean) << std::endl;
      else
        std::cout << fmt_f64(s.mean) << ' ' << fmt_f64(s.stddev) << std::endl;
      return 0;
    }

    if (cross->parsed()) {
      std::vector<std::pair<int, Mlp>> policies;
      CliOptions first;
      for (std::size_t k = 0; k < cross_opts.run_dirs.size(); ++k) {
        fs::path dir = cross_opts.run_dirs[k];
        CliOptions o = load_run_config(dir);
        if (k == 0) {
          first = o;
        } else if (o.task != first.task) {
          throw std::invalid_argument("run dirs mix tasks: " + o.task +
                                      " vs " + first.task);
        }
        fs::path ckpt_path = dir / "actor.ckpt";
        if (!fs::exists(ckpt_path))
          throw std::invalid_argument("checkpoint not found: " +
                                      ckpt_path.string());
        Checkpoint ckpt;
        try {
          ckpt = load_checkpoint(ckpt_path);
        } catch (const std::runtime_error& e) {
          throw std::invalid_argument(e.what());
        }
        policies.emplace_back(o.agents, std::move(ckpt.net));
      }
      first.agents = cross_opts.eval_agents.front();
      TaskSpec base_spec = build_task_spec(first);
      std::vector<CrossEvalCell> cells = cross_evaluate(
          policies, cross_opts.eval_agents, base_spec,
          first.trainer.history_horizon, cross_opts.runs, cross_opts.seed,
          cross_opts.jobs);
      if (cross_opts.output.empty()) {
        write_cross_eval_csv(std::cout, cells);
      } else {
        std::ofstream out(cross_opts.output);
        write_cross_eval_csv(out, cells);
      }
      return 0;
    }

    if (baseline->parsed()) {
      TrainerConfig cfg = build_trainer_config(base_opts);
      TaskSpec spec = build_task_spec(base_opts);
      return run_training(spec, cfg, base_opts, true);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
