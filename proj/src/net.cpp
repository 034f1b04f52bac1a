#include "swarmrl/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "swarmrl/fmt.hpp"

namespace swarm {

namespace {

void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 3)
    throw std::invalid_argument("mlp needs at least one hidden layer");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("mlp layer widths must be >= 1");
}

}  // namespace

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument(
        fmt_str("mlp input has %zu entries, expected %d", x.size(), input_dim()));
  std::vector<double> act(x.begin(), x.end());
  std::vector<double> next;
  for (int l = 0; l < layer_count(); ++l) {
    int rows = widths[l + 1];
    int cols = widths[l];
    const double* w = weights[l].data();
    next.resize(rows);
    for (int r = 0; r < rows; ++r) {
      double z = biases[l][r];
      const double* row = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += row[c] * act[c];
      next[r] = (l + 1 < layer_count()) ? elu(z) : z;
    }
    act.swap(next);
  }
  return act;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x,
                            ForwardCache& cache) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument(
        fmt_str("mlp input has %zu entries, expected %d", x.size(),
                net.input_dim()));
  cache.input.assign(x.begin(), x.end());
  cache.preacts.resize(net.layer_count());
  cache.acts.resize(net.layer_count());
  const std::vector<double>* prev = &cache.input;
  for (int l = 0; l < net.layer_count(); ++l) {
    int rows = net.widths[l + 1];
    int cols = net.widths[l];
    const double* w = net.weights[l].data();
    cache.preacts[l].resize(rows);
    cache.acts[l].resize(rows);
    for (int r = 0; r < rows; ++r) {
      double z = net.biases[l][r];
      const double* row = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += row[c] * (*prev)[c];
      cache.preacts[l][r] = z;
      cache.acts[l][r] = (l + 1 < net.layer_count()) ? elu(z) : z;
    }
    prev = &cache.acts[l];
  }
  return cache.acts.back();
}

void MlpGrad::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGrad::scale(double s) {
  for (auto& w : weights)
    for (double& v : w) v *= s;
  for (auto& b : biases)
    for (double& v : b) v *= s;
}

bool MlpGrad::finite() const {
  for (const auto& w : weights)
    for (double v : w)
      if (!std::isfinite(v)) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

MlpGrad zero_grad_like(const Mlp& net) {
  MlpGrad g;
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights[l].assign(net.weights[l].size(), 0.0);
    g.biases[l].assign(net.biases[l].size(), 0.0);
  }
  return g;
}

std::vector<double> backward(const Mlp& net, const ForwardCache& cache,
                             std::span<const double> upstream, MlpGrad& grad) {
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw std::invalid_argument("upstream gradient dimension mismatch");

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev_delta;
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    int rows = net.widths[l + 1];
    int cols = net.widths[l];
    const std::vector<double>& below =
        (l == 0) ? cache.input : cache.acts[l - 1];

    double* gw = grad.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      double d = delta[r];
      grad.biases[l][r] += d;
      double* gw_row = gw + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gw_row[c] += d * below[c];
    }

    // propagate through W^T, then through the ELU of the layer below
    prev_delta.assign(cols, 0.0);
    const double* w = net.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      double d = delta[r];
      const double* row = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) prev_delta[c] += row[c] * d;
    }
    if (l > 0) {
      for (int c = 0; c < cols; ++c)
        prev_delta[c] *= elu_grad(cache.preacts[l - 1][c]);
    }
    delta.swap(prev_delta);
  }
  return delta;
}

Mlp init_mlp(const std::vector<int>& widths, double output_init_bound,
             Rng& rng) {
  check_widths(widths);
  Mlp net;
  net.widths = widths;
  int layers = static_cast<int>(widths.size()) - 1;
  net.weights.resize(layers);
  net.biases.resize(layers);
  for (int l = 0; l < layers; ++l) {
    int rows = widths[l + 1];
    int cols = widths[l];
    double bound = (l + 1 < layers) ? 1.0 / std::sqrt(static_cast<double>(cols))
                                    : output_init_bound;
    net.weights[l].resize(static_cast<std::size_t>(rows) * cols);
    net.biases[l].resize(rows);
    for (double& w : net.weights[l]) w = rng.uniform(-bound, bound);
    for (double& b : net.biases[l]) b = rng.uniform(-bound, bound);
  }
  return net;
}

AdamState make_adam(const Mlp& net, double alpha) {
  AdamState s;
  s.alpha = alpha;
  s.m_w.resize(net.weights.size());
  s.v_w.resize(net.weights.size());
  s.m_b.resize(net.biases.size());
  s.v_b.resize(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    s.m_w[l].assign(net.weights[l].size(), 0.0);
    s.v_w[l].assign(net.weights[l].size(), 0.0);
    s.m_b[l].assign(net.biases[l].size(), 0.0);
    s.v_b[l].assign(net.biases[l].size(), 0.0);
  }
  return s;
}

namespace {

void adam_update(double alpha, double beta1, double beta2, double eps,
                 double bc1, double bc2, std::vector<double>& m,
                 std::vector<double>& v, std::vector<double>& p,
                 const std::vector<double>& g) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= alpha * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void adam_step(AdamState& state, Mlp& net, const MlpGrad& grad) {
  if (!grad.finite())
    throw std::runtime_error("non-finite gradient in adam_step");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    adam_update(state.alpha, state.beta1, state.beta2, state.eps, bc1, bc2,
                state.m_w[l], state.v_w[l], net.weights[l], grad.weights[l]);
    adam_update(state.alpha, state.beta1, state.beta2, state.eps, bc1, bc2,
                state.m_b[l], state.v_b[l], net.biases[l], grad.biases[l]);
  }
}

TargetPair make_target_pair(Mlp net, double tau) {
  TargetPair pair;
  pair.target = net;
  pair.live = std::move(net);
  pair.tau = tau;
  return pair;
}

void soft_update(TargetPair& pair) {
  double tau = pair.tau;
  for (std::size_t l = 0; l < pair.live.weights.size(); ++l) {
    for (std::size_t i = 0; i < pair.live.weights[l].size(); ++i)
      pair.target.weights[l][i] =
          tau * pair.live.weights[l][i] + (1.0 - tau) * pair.target.weights[l][i];
    for (std::size_t i = 0; i < pair.live.biases[l].size(); ++i)
      pair.target.biases[l][i] =
          tau * pair.live.biases[l][i] + (1.0 - tau) * pair.target.biases[l][i];
  }
}

void save_checkpoint(const Mlp& net, double tau,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint file: " + path.string());
  out << "swarmrl-checkpoint v1\n";
  out << "tau " << fmt_f64(tau) << "\n";
  out << "widths";
  for (int w : net.widths) out << ' ' << w;
  out << '\n';
  for (int l = 0; l < net.layer_count(); ++l) {
    int rows = net.widths[l + 1];
    int cols = net.widths[l];
    out << "weights " << l << ' ' << rows << ' ' << cols << '\n';
    for (int r = 0; r < rows; ++r) {
      const double* row = net.weights[l].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        if (c) out << ' ';
        out << fmt_f64(row[c]);
      }
      out << '\n';
    }
    out << "bias " << l << ' ' << rows << '\n';
    for (int r = 0; r < rows; ++r) {
      if (r) out << ' ';
      out << fmt_f64(net.biases[l][r]);
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

namespace {

std::runtime_error ckpt_error(const std::filesystem::path& path,
                              const std::string& what) {
  return std::runtime_error("bad checkpoint " + path.string() + ": " + what);
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "swarmrl-checkpoint v1")
    throw ckpt_error(path, "unrecognized header");

  Checkpoint ckpt;
  std::string key;
  if (!(in >> key >> ckpt.tau) || key != "tau")
    throw ckpt_error(path, "missing tau");

  if (!(in >> key) || key != "widths") throw ckpt_error(path, "missing widths");
  std::getline(in, line);
  {
    std::istringstream ws(line);
    int w;
    while (ws >> w) ckpt.net.widths.push_back(w);
  }
  check_widths(ckpt.net.widths);

  int layers = static_cast<int>(ckpt.net.widths.size()) - 1;
  ckpt.net.weights.resize(layers);
  ckpt.net.biases.resize(layers);
  for (int l = 0; l < layers; ++l) {
    int rows = 0, cols = 0, idx = -1;
    if (!(in >> key >> idx >> rows >> cols) || key != "weights" || idx != l ||
        rows != ckpt.net.widths[l + 1] || cols != ckpt.net.widths[l])
      throw ckpt_error(path, fmt_str("bad weights header for layer %d", l));
    ckpt.net.weights[l].resize(static_cast<std::size_t>(rows) * cols);
    for (double& v : ckpt.net.weights[l])
      if (!(in >> v)) throw ckpt_error(path, "truncated weight data");
    if (!(in >> key >> idx >> rows) || key != "bias" || idx != l ||
        rows != ckpt.net.widths[l + 1])
      throw ckpt_error(path, fmt_str("bad bias header for layer %d", l));
    ckpt.net.biases[l].resize(rows);
    for (double& v : ckpt.net.biases[l])
      if (!(in >> v)) throw ckpt_error(path, "truncated bias data");
  }
  if (!(in >> key) || key != "end") throw ckpt_error(path, "missing end marker");
  return ckpt;
}

}  // namespace swarm
