#include "swarmrl/harness.hpp"

#include <stdexcept>

#include "swarmrl/fmt.hpp"

namespace swarm {

std::vector<CrossEvalCell> cross_evaluate(
    const std::vector<std::pair<int, Mlp>>& policies,
    const std::vector<int>& eval_agents, const TaskSpec& base_spec,
    int history_horizon, int runs, std::uint64_t seed, int jobs) {
  std::vector<CrossEvalCell> cells;
  cells.reserve(policies.size() * eval_agents.size());
  for (const auto& [m_train, actor] : policies) {
    for (int m_eval : eval_agents) {
      TaskSpec spec = base_spec;
      spec.agents = m_eval;
      spec.validate();
      std::uint64_t cell_seed =
          derive_seed(seed, static_cast<std::uint64_t>(m_train) * 10007 +
                                static_cast<std::uint64_t>(m_eval));
      EvalSummary s =
          evaluate(actor, spec, history_horizon, runs, cell_seed, jobs);
      cells.push_back({m_train, m_eval, s.mean, s.stddev, runs});
    }
  }
  return cells;
}

void write_cross_eval_csv(std::ostream& out,
                          const std::vector<CrossEvalCell>& cells) {
  out << "m_train,m_eval,mean_return,std_return,runs\n";
  for (const CrossEvalCell& c : cells) {
    out << c.m_train << ',' << c.m_eval << ',' << fmt_f64(c.mean) << ','
        << fmt_f64(c.stddev) << ',' << c.runs << '\n';
  }
}

void write_returns_csv(std::ostream& out, const EvalSummary& summary) {
  out << "run,return\n";
  for (std::size_t r = 0; r < summary.returns.size(); ++r)
    out << r << ',' << fmt_f64(summary.returns[r]) << '\n';
}

BaselineResult no_comm_baseline(TaskSpec spec, TrainerConfig cfg, int episodes,
                                int final_eval_runs, std::uint64_t seed,
                                const Trainer::EvalHook& on_eval) {
  if (spec.kind != TaskKind::localization)
    throw std::invalid_argument("the no-communication baseline is a localization task");
  spec.agents = 1;
  spec.obs_mode = ObservationMode::no_comm;
  Trainer trainer(spec, cfg, seed);
  BaselineResult result;
  result.training = trainer.train(episodes, on_eval);
  result.final_eval =
      evaluate(result.training.actor, spec, cfg.history_horizon,
               final_eval_runs, derive_seed(seed, 0xba5e11), cfg.eval_jobs);
  return result;
}

}  // namespace swarm
