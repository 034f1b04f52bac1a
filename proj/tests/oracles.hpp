#pragma once

// Test-only oracles. Each reimplements a quantity the library computes, by a
// deliberately different route (image enumeration, direct summation, finite
// differences), and must stay independent of the code paths it checks.

#include <cmath>
#include <functional>
#include <vector>

#include "swarmrl/net.hpp"
#include "swarmrl/world.hpp"

namespace oracle {

// Minimum-image distance by brute force over the 9 periodic images.
inline double torus_distance(double x1, double y1, double x2, double y2,
                             double half_width) {
  double best = std::numeric_limits<double>::infinity();
  double period = 2.0 * half_width;
  for (int kx = -1; kx <= 1; ++kx) {
    for (int ky = -1; ky <= 1; ++ky) {
      double dx = x2 - x1 + kx * period;
      double dy = y2 - y1 + ky * period;
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

// Unordered pairs whose minimum-image distance lies in [lo, hi].
inline int edge_count(const std::vector<swarm::AgentPose>& poses,
                      double half_width, double lo, double hi) {
  int edges = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t m = i + 1; m < poses.size(); ++m) {
      double d = torus_distance(poses[i].x, poses[i].y, poses[m].x, poses[m].y,
                                half_width);
      if (d >= lo && d <= hi) ++edges;
    }
  }
  return edges;
}

// Direct-summation RBF histogram.
inline std::vector<double> histogram(const std::vector<double>& distances,
                                     const std::vector<double>& centers,
                                     double sigma, double radius) {
  std::vector<double> numer(centers.size(), 0.0);
  double denom = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (double d : distances) {
      if (d < 0.0 || d > radius) continue;
      double z = d - centers[k];
      double psi = std::exp(-(z * z) / (2.0 * sigma * sigma));
      numer[k] += psi;
      denom += psi;
    }
  }
  if (denom > 0.0)
    for (double& v : numer) v /= denom;
  return numer;
}

// ---- finite differences over Mlp parameters -------------------------------

inline std::vector<double> flatten_params(const swarm::Mlp& net) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    flat.insert(flat.end(), net.weights[l].begin(), net.weights[l].end());
    flat.insert(flat.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return flat;
}

inline void unflatten_params(swarm::Mlp& net, const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (double& w : net.weights[l]) w = flat[pos++];
    for (double& b : net.biases[l]) b = flat[pos++];
  }
}

inline std::vector<double> flatten_grad(const swarm::MlpGrad& grad) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < grad.weights.size(); ++l) {
    flat.insert(flat.end(), grad.weights[l].begin(), grad.weights[l].end());
    flat.insert(flat.end(), grad.biases[l].begin(), grad.biases[l].end());
  }
  return flat;
}

// Central finite differences of f at params, step h.
inline std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> params, double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    double orig = params[k];
    params[k] = orig + h;
    double hi = f(params);
    params[k] = orig - h;
    double lo = f(params);
    params[k] = orig;
    grad[k] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

// Scale-clamped relative error, the usual gradient-check metric.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_error(const std::vector<double>& a,
                            const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, rel_error(a[i], b[i]));
  return worst;
}

// Smallest |preactivation| over the hidden layers; finite differences are
// only trustworthy when no ELU sits too close to its kink.
inline double min_hidden_preact_margin(const swarm::Mlp& net,
                                       const std::vector<double>& input) {
  swarm::ForwardCache cache;
  swarm::forward(net, input, cache);
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l + 1 < net.layer_count(); ++l)
    for (double z : cache.preacts[l]) margin = std::min(margin, std::abs(z));
  return margin;
}

}  // namespace oracle
