#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "swarmrl/rng.hpp"

namespace swarm {

inline double elu(double z) { return z >= 0.0 ? z : std::expm1(z); }
inline double elu_grad(double z) { return z >= 0.0 ? 1.0 : std::exp(z); }

// Fully connected network, ELU on hidden layers, linear output. Weights are
// row-major [out x in]; all arithmetic in 64-bit floats.
struct Mlp {
  std::vector<int> widths;  // input, hidden..., output
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;

  std::vector<double> forward(std::span<const double> x) const;
};

// Activations recorded by a forward pass, consumed by backward().
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> preacts;  // z per layer
  std::vector<std::vector<double>> acts;     // post-activation per layer
};

std::vector<double> forward(const Mlp& net, std::span<const double> x,
                            ForwardCache& cache);

struct MlpGrad {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void zero();
  void scale(double s);
  bool finite() const;
};

MlpGrad zero_grad_like(const Mlp& net);

// Reverse-mode gradients of dot(output, upstream) with respect to every
// parameter (accumulated into `grad`) and to the input (returned).
std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> upstream, MlpGrad& grad);

// Hidden layers U[-1/sqrt(fan_in), 1/sqrt(fan_in)]; output layer
// U[-output_init_bound, output_init_bound]. Biases drawn from the same
// distribution as their layer's weights.
Mlp init_mlp(const std::vector<int>& widths, double output_init_bound,
             Rng& rng);

struct AdamState {
  double alpha = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

AdamState make_adam(const Mlp& net, double alpha);

// One bias-corrected descent step p <- p - alpha * mhat / (sqrt(vhat) + eps).
// Callers wanting ascent negate the gradient. Throws on non-finite gradients.
void adam_step(AdamState& state, Mlp& net, const MlpGrad& grad);

// Live network plus its slowly tracking copy.
struct TargetPair {
  Mlp live;
  Mlp target;
  double tau = 1e-4;
};

TargetPair make_target_pair(Mlp net, double tau);

// target <- tau * live + (1 - tau) * target, elementwise.
void soft_update(TargetPair& pair);

// Scales an action-space gradient by the remaining headroom to the bound it
// pushes toward (Hausknecht-style bounded-action rule). `g` is the ascent
// direction; positive g pushes the action up.
inline double invert_gradient(double g, double p, double p_min, double p_max) {
  double range = p_max - p_min;
  if (g > 0.0) return g * (p_max - p) / range;
  return g * (p - p_min) / range;
}

// Self-describing text checkpoint; load + re-save is byte-identical.
void save_checkpoint(const Mlp& net, double tau,
                     const std::filesystem::path& path);

struct Checkpoint {
  Mlp net;
  double tau = 0.0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swarm
