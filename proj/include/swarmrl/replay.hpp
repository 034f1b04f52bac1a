#pragma once

#include <deque>
#include <filesystem>

#include "swarmrl/task.hpp"

namespace swarm {

// One synchronized swarm step: global states before and after, the flattened
// per-agent histories the actions were chosen from (and the resulting next
// histories), the executed joint action, and the joint reward.
struct Transition {
  GlobalState state;
  GlobalState next_state;
  std::vector<std::vector<double>> histories;
  std::vector<std::vector<double>> next_histories;
  std::vector<AgentAction> actions;
  double reward = 0.0;
};

// FIFO experience store with uniform with-replacement minibatch sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 500000);

  void push(Transition t);

  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool ready(std::size_t batch_size) const { return size() >= batch_size; }

  // Pointers stay valid until the next push. Throws when the buffer holds
  // fewer than batch_size transitions.
  std::vector<const Transition*> sample(std::size_t batch_size, Rng& rng) const;

  const Transition& at(std::size_t i) const { return store_.at(i); }  // 0 = oldest

  void save(const std::filesystem::path& path) const;
  static ReplayBuffer load(const std::filesystem::path& path);

 private:
  std::size_t capacity_;
  std::deque<Transition> store_;
};

}  // namespace swarm
