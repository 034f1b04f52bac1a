#include "swarmrl/task.hpp"

#include <cmath>
#include <stdexcept>

#include "swarmrl/fmt.hpp"

namespace swarm {

TaskSpec TaskSpec::graph(int agents) {
  TaskSpec spec;
  spec.kind = TaskKind::graph;
  spec.agents = agents;
  spec.world = WorldExtent{10.0};
  spec.validate();
  return spec;
}

TaskSpec TaskSpec::localization(int agents) {
  TaskSpec spec;
  spec.kind = TaskKind::localization;
  spec.agents = agents;
  spec.world = WorldExtent{15.0};
  spec.validate();
  return spec;
}

int TaskSpec::observation_dim() const {
  if (obs_mode == ObservationMode::no_comm) return 2;
  if (kind == TaskKind::graph) return histogram_bins;
  return histogram_bins + 3;
}

HistogramConfig TaskSpec::histogram_config() const {
  return HistogramConfig::make(histogram_bins, comm_radius, rbf_sigma);
}

void TaskSpec::validate() const {
  if (agents < 1) throw std::invalid_argument("agents must be >= 1");
  if (world.half_width <= 0.0)
    throw std::invalid_argument("world half_width must be positive");
  if (comm_radius <= 0.0 || comm_radius >= world.half_width)
    throw std::invalid_argument(
        "comm_radius must be positive and smaller than the world half width");
  if (histogram_bins < 2)
    throw std::invalid_argument("histogram_bins must be >= 2");
  if (rbf_sigma <= 0.0) throw std::invalid_argument("rbf_sigma must be positive");
  if (edge_min < 0.0 || edge_max <= edge_min)
    throw std::invalid_argument("edge band must satisfy 0 <= edge_min < edge_max");
  if (episode_steps < 1)
    throw std::invalid_argument("episode_steps must be >= 1");
  if (action_cost < 0.0)
    throw std::invalid_argument("action_cost must be >= 0");
  if (obs_mode == ObservationMode::no_comm && kind != TaskKind::localization)
    throw std::invalid_argument("no_comm observations exist only for localization");
}

GlobalState reset(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return reset(spec, rng);
}

GlobalState reset(const TaskSpec& spec, Rng& rng) {
  spec.validate();
  GlobalState s;
  s.world = spec.world;
  s.poses.resize(spec.agents);
  double hw = spec.world.half_width;
  for (AgentPose& p : s.poses) {
    p.x = rng.uniform(-hw, hw);
    p.y = rng.uniform(-hw, hw);
    p.phi = rng.angle();
  }
  if (spec.kind == TaskKind::localization) {
    s.found.assign(spec.agents, 0);
    s.target.x = rng.uniform(-hw, hw);
    s.target.y = rng.uniform(-hw, hw);
  }
  return s;
}

namespace {

double target_distance(const GlobalState& s, int i) {
  AgentPose t{s.target.x, s.target.y, 0.0};
  return torus_distance(s.poses[i], t, s.world);
}

double action_cost_sum(std::span<const AgentAction> actions, double coeff) {
  double sum = 0.0;
  for (const AgentAction& a : actions)
    sum += std::hypot(a.speed, a.turn);
  return coeff * sum;
}

}  // namespace

StepResult step(const GlobalState& state,
                std::span<const AgentAction> joint_action,
                const TaskSpec& spec) {
  if (static_cast<int>(joint_action.size()) != state.agent_count())
    throw std::invalid_argument(
        fmt_str("joint action has %zu entries for %d agents",
                joint_action.size(), state.agent_count()));

  std::vector<AgentAction> clamped(joint_action.size());
  for (std::size_t i = 0; i < joint_action.size(); ++i)
    clamped[i] = clamp_action(joint_action[i]);

  StepResult result;
  result.state = state;
  for (int i = 0; i < state.agent_count(); ++i)
    result.state.poses[i] = step_pose(state.poses[i], clamped[i], state.world);

  if (spec.kind == TaskKind::localization) {
    for (int i = 0; i < state.agent_count(); ++i) {
      if (!result.state.found[i] &&
          target_distance(result.state, i) <= spec.comm_radius)
        result.state.found[i] = 1;
    }
    result.reward = reward_localization(result.state, clamped, spec);
  } else {
    result.reward = reward_graph(result.state, clamped, spec);
  }
  return result;
}

double reward_graph(const GlobalState& state,
                    std::span<const AgentAction> joint_action,
                    const TaskSpec& spec) {
  int edges = 0;
  for (int i = 0; i < state.agent_count(); ++i) {
    for (int m = i + 1; m < state.agent_count(); ++m) {
      double d = torus_distance(state.poses[i], state.poses[m], state.world);
      if (d >= spec.edge_min && d <= spec.edge_max) ++edges;
    }
  }
  return static_cast<double>(edges) -
         action_cost_sum(joint_action, spec.action_cost);
}

double reward_localization(const GlobalState& state,
                           std::span<const AgentAction> joint_action,
                           const TaskSpec& spec) {
  int found = 0;
  for (std::uint8_t f : state.found) found += f;
  return static_cast<double>(found) -
         action_cost_sum(joint_action, spec.action_cost);
}

std::vector<double> observe(const GlobalState& state, int agent_index,
                            const TaskSpec& spec) {
  if (agent_index < 0 || agent_index >= state.agent_count())
    throw std::invalid_argument("agent_index out of range");

  if (spec.obs_mode == ObservationMode::no_comm) {
    double dt = target_distance(state, agent_index);
    return {static_cast<double>(state.found[agent_index]),
            dt <= spec.comm_radius ? dt : -1.0};
  }

  std::vector<double> neighbor_dists;
  neighbor_dists.reserve(state.agent_count() - 1);
  for (int m = 0; m < state.agent_count(); ++m) {
    if (m == agent_index) continue;
    neighbor_dists.push_back(
        torus_distance(state.poses[agent_index], state.poses[m], state.world));
  }
  std::vector<double> histogram =
      distance_histogram(neighbor_dists, spec.histogram_config());

  if (spec.kind == TaskKind::graph) return histogram;

  double dt = target_distance(state, agent_index);
  double neighbor_sees_target = 0.0;
  for (int m = 0; m < state.agent_count(); ++m) {
    if (m == agent_index) continue;
    double dm = torus_distance(state.poses[agent_index], state.poses[m],
                               state.world);
    if (dm <= spec.comm_radius &&
        target_distance(state, m) <= spec.comm_radius) {
      neighbor_sees_target = 1.0;
      break;
    }
  }

  std::vector<double> obs;
  obs.reserve(histogram.size() + 3);
  obs.push_back(static_cast<double>(state.found[agent_index]));
  obs.push_back(dt <= spec.comm_radius ? dt : -1.0);
  obs.push_back(neighbor_sees_target);
  obs.insert(obs.end(), histogram.begin(), histogram.end());
  return obs;
}

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path,
                                   const TaskSpec& spec)
    : with_found_(spec.kind == TaskKind::localization) {
  out_.open(path);
  if (!out_) throw std::runtime_error("cannot open trajectory file: " + path.string());
  out_ << "episode,t";
  for (int i = 0; i < spec.agents; ++i) {
    out_ << ",x" << i << ",y" << i << ",phi" << i;
    if (with_found_) out_ << ",l" << i;
  }
  out_ << ",reward\n";
}

void TrajectoryWriter::append(int episode, int t, const GlobalState& state,
                              double reward) {
  out_ << episode << ',' << t;
  for (int i = 0; i < state.agent_count(); ++i) {
    out_ << ',' << fmt_f64(state.poses[i].x) << ',' << fmt_f64(state.poses[i].y)
         << ',' << fmt_f64(state.poses[i].phi);
    if (with_found_) out_ << ',' << static_cast<int>(state.found[i]);
  }
  out_ << ',' << fmt_f64(reward) << '\n';
}

}  // namespace swarm
