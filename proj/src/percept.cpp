#include "swarmrl/percept.hpp"

#include <algorithm>
#include <cmath>

namespace swarm {

HistogramConfig HistogramConfig::make(int bins, double radius, double sigma) {
  if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  if (radius <= 0.0 || sigma <= 0.0)
    throw std::invalid_argument("histogram radius and sigma must be positive");
  HistogramConfig cfg;
  cfg.bins = bins;
  cfg.radius = radius;
  cfg.sigma = sigma;
  cfg.centers.resize(bins);
  for (int k = 0; k < bins; ++k)
    cfg.centers[k] = radius * static_cast<double>(k) / (bins - 1);
  return cfg;
}

double rbf(double dist, double center, double sigma) {
  double z = dist - center;
  return std::exp(-(z * z) / (2.0 * sigma * sigma));
}

std::vector<double> distance_histogram(std::span<const double> distances,
                                       const HistogramConfig& cfg) {
  std::vector<double> u(cfg.centers.size(), 0.0);
  double total = 0.0;
  for (double d : distances) {
    if (d < 0.0 || d > cfg.radius) continue;
    for (std::size_t k = 0; k < cfg.centers.size(); ++k) {
      double w = rbf(d, cfg.centers[k], cfg.sigma);
      u[k] += w;
      total += w;
    }
  }
  if (total > 0.0) {
    for (double& v : u) v /= total;
  }
  return u;
}

AgentHistory::AgentHistory(int horizon, int obs_dim)
    : horizon_(horizon), obs_dim_(obs_dim) {
  if (horizon < 1 || obs_dim < 1)
    throw std::invalid_argument("history horizon and obs dim must be >= 1");
  flat_.assign(static_cast<std::size_t>(horizon) * (obs_dim + 2), 0.0);
}

void AgentHistory::push(std::span<const double> obs, const AgentAction& act) {
  if (static_cast<int>(obs.size()) != obs_dim_)
    throw std::invalid_argument("observation dimension mismatch in history");
  std::size_t stride = static_cast<std::size_t>(obs_dim_) + 2;
  // evict the oldest slot, append the new pair at the end
  std::rotate(flat_.begin(), flat_.begin() + stride, flat_.end());
  double* slot = flat_.data() + flat_.size() - stride;
  std::copy(obs.begin(), obs.end(), slot);
  slot[obs_dim_] = act.speed;
  slot[obs_dim_ + 1] = act.turn;
}

void AgentHistory::clear() { std::fill(flat_.begin(), flat_.end(), 0.0); }

}  // namespace swarm
