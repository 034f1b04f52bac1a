#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "swarmrl/world.hpp"

namespace swarm {

// RBF bank for the neighbor-distance histogram: `bins` centers equally
// spaced on [0, radius].
struct HistogramConfig {
  int bins = 21;
  double radius = 4.0;
  double sigma = 0.25;
  std::vector<double> centers;

  static HistogramConfig make(int bins = 21, double radius = 4.0,
                              double sigma = 0.25);
};

// exp(-(dist - center)^2 / (2 sigma^2)); peaks at 1 when dist == center.
double rbf(double dist, double center, double sigma);

// Normalized RBF histogram over the given neighbor distances. Distances
// beyond the radius are ignored; with no in-range neighbor the result is the
// all-zero vector.
std::vector<double> distance_histogram(std::span<const double> distances,
                                       const HistogramConfig& cfg);

// Fixed-horizon ring of (observation, action) pairs, oldest first, flattened
// for network input. Slots are zero until a real pair is pushed into them.
class AgentHistory {
 public:
  AgentHistory(int horizon, int obs_dim);

  void push(std::span<const double> obs, const AgentAction& act);
  void clear();

  const std::vector<double>& flattened() const { return flat_; }
  int horizon() const { return horizon_; }
  int obs_dim() const { return obs_dim_; }
  int flat_dim() const { return static_cast<int>(flat_.size()); }

 private:
  int horizon_;
  int obs_dim_;
  std::vector<double> flat_;  // horizon slots of (obs_dim + 2) values
};

}  // namespace swarm
