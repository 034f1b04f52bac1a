#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "swarmrl/percept.hpp"
#include "swarmrl/world.hpp"

namespace swarm {

enum class TaskKind { graph, localization };

// What each agent senses. `no_comm` is the single-agent localization
// baseline: just [found_bit, target_distance], no neighbor sensing.
enum class ObservationMode { full, no_comm };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct TaskSpec {
  TaskKind kind = TaskKind::graph;
  int agents = 2;
  WorldExtent world{10.0};
  double comm_radius = 4.0;
  int histogram_bins = 21;
  double rbf_sigma = 0.25;
  double edge_min = 1.5;
  double edge_max = 3.0;
  int episode_steps = 500;
  double action_cost = 0.05;
  ObservationMode obs_mode = ObservationMode::full;

  static TaskSpec graph(int agents);
  static TaskSpec localization(int agents);

  int observation_dim() const;
  HistogramConfig histogram_config() const;
  void validate() const;  // throws std::invalid_argument on bad fields
};

// Everything the critic may see: all agent poses plus, for the localization
// task, the sticky found bits and the target position.
struct GlobalState {
  std::vector<AgentPose> poses;
  std::vector<std::uint8_t> found;  // localization only, one sticky bit per agent
  Vec2 target;
  WorldExtent world{10.0};

  int agent_count() const { return static_cast<int>(poses.size()); }
};

struct StepResult {
  GlobalState state;
  double reward = 0.0;
};

// Agents i.i.d. uniform over the world with uniform headings; localization
// also draws a uniform target and clears all found bits.
GlobalState reset(const TaskSpec& spec, std::uint64_t seed);
GlobalState reset(const TaskSpec& spec, Rng& rng);

// Synchronous swarm step: clamp actions, advance every pose from the
// pre-step state, refresh found bits, then score the post-step state.
StepResult step(const GlobalState& state,
                std::span<const AgentAction> joint_action,
                const TaskSpec& spec);

// Number of unordered agent pairs at torus distance within the edge band,
// minus the action cost.
double reward_graph(const GlobalState& state,
                    std::span<const AgentAction> joint_action,
                    const TaskSpec& spec);

// Count of agents that have found the target, minus the action cost.
double reward_localization(const GlobalState& state,
                           std::span<const AgentAction> joint_action,
                           const TaskSpec& spec);

// Per-agent observation vector; see TaskSpec::observation_dim for layout
// sizes. Localization layout: [found, target_distance_or_-1, neighbor_sees
// _target, histogram...].
std::vector<double> observe(const GlobalState& state, int agent_index,
                            const TaskSpec& spec);

// One CSV row per environment step: episode, t, per-agent x, y, phi
// (+ found bit on the localization task), then the step reward.
class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::filesystem::path& path, const TaskSpec& spec);

  void append(int episode, int t, const GlobalState& state, double reward);

 private:
  std::ofstream out_;
  bool with_found_;
};

}  // namespace swarm
