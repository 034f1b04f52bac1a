#include "swarmrl/replay.hpp"

#include <fstream>
#include <stdexcept>

#include "swarmrl/fmt.hpp"

namespace swarm {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() == capacity_) store_.pop_front();
  store_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size,
                                                    Rng& rng) const {
  if (store_.size() < batch_size)
    throw std::runtime_error(
        fmt_str("replay buffer not ready: %zu stored, batch %zu", store_.size(),
                batch_size));
  std::vector<const Transition*> batch(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    batch[i] = &store_[rng.index(store_.size())];
  return batch;
}

namespace {

void write_state(std::ofstream& out, const GlobalState& s) {
  out << s.agent_count() << ' ' << s.found.size() << ' '
      << fmt_f64(s.world.half_width) << ' ' << fmt_f64(s.target.x) << ' '
      << fmt_f64(s.target.y) << '\n';
  for (const AgentPose& p : s.poses)
    out << fmt_f64(p.x) << ' ' << fmt_f64(p.y) << ' ' << fmt_f64(p.phi) << '\n';
  if (!s.found.empty()) {
    for (std::size_t i = 0; i < s.found.size(); ++i) {
      if (i) out << ' ';
      out << static_cast<int>(s.found[i]);
    }
    out << '\n';
  }
}

GlobalState read_state(std::ifstream& in) {
  GlobalState s;
  std::size_t agents = 0, found = 0;
  if (!(in >> agents >> found >> s.world.half_width >> s.target.x >> s.target.y))
    throw std::runtime_error("truncated replay snapshot (state header)");
  s.poses.resize(agents);
  for (AgentPose& p : s.poses)
    if (!(in >> p.x >> p.y >> p.phi))
      throw std::runtime_error("truncated replay snapshot (poses)");
  s.found.resize(found);
  for (std::size_t i = 0; i < found; ++i) {
    int bit = 0;
    if (!(in >> bit)) throw std::runtime_error("truncated replay snapshot (found bits)");
    s.found[i] = static_cast<std::uint8_t>(bit);
  }
  return s;
}

void write_vectors(std::ofstream& out, const std::vector<std::vector<double>>& vs) {
  out << vs.size() << '\n';
  for (const auto& v : vs) {
    out << v.size();
    for (double x : v) out << ' ' << fmt_f64(x);
    out << '\n';
  }
}

std::vector<std::vector<double>> read_vectors(std::ifstream& in) {
  std::size_t n = 0;
  if (!(in >> n)) throw std::runtime_error("truncated replay snapshot (vector count)");
  std::vector<std::vector<double>> vs(n);
  for (auto& v : vs) {
    std::size_t len = 0;
    if (!(in >> len)) throw std::runtime_error("truncated replay snapshot (vector len)");
    v.resize(len);
    for (double& x : v)
      if (!(in >> x)) throw std::runtime_error("truncated replay snapshot (vector data)");
  }
  return vs;
}

}  // namespace

void ReplayBuffer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open replay snapshot: " + path.string());
  out << "swarmrl-replay v1\n";
  out << capacity_ << ' ' << store_.size() << '\n';
  for (const Transition& t : store_) {
    write_state(out, t.state);
    write_state(out, t.next_state);
    write_vectors(out, t.histories);
    write_vectors(out, t.next_histories);
    out << t.actions.size() << '\n';
    for (const AgentAction& a : t.actions)
      out << fmt_f64(a.speed) << ' ' << fmt_f64(a.turn) << '\n';
    out << fmt_f64(t.reward) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing replay snapshot: " + path.string());
}

ReplayBuffer ReplayBuffer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay snapshot: " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != "swarmrl-replay v1")
    throw std::runtime_error("unrecognized replay snapshot header in " + path.string());
  std::size_t capacity = 0, count = 0;
  if (!(in >> capacity >> count))
    throw std::runtime_error("truncated replay snapshot (counts)");
  ReplayBuffer buf(capacity);
  for (std::size_t i = 0; i < count; ++i) {
    Transition t;
    t.state = read_state(in);
    t.next_state = read_state(in);
    t.histories = read_vectors(in);
    t.next_histories = read_vectors(in);
    std::size_t actions = 0;
    if (!(in >> actions)) throw std::runtime_error("truncated replay snapshot (actions)");
    t.actions.resize(actions);
    for (AgentAction& a : t.actions)
      if (!(in >> a.speed >> a.turn))
        throw std::runtime_error("truncated replay snapshot (action data)");
    if (!(in >> t.reward)) throw std::runtime_error("truncated replay snapshot (reward)");
    buf.push(std::move(t));
  }
  return buf;
}

}  // namespace swarm
