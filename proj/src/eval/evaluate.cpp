#include "dialogen/eval/evaluate.hpp"

#include <fstream>

#include "dialogen/core/error.hpp"

namespace dialogen::eval {

void to_json(nlohmann::json& j, const EpisodeTranscript& t) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : t.turns) turns.push_back({{"speaker", turn.speaker}, {"act", to_json(turn.act)}});
  j = {{"goal", to_json(t.goal)},
       {"turns", turns},
       {"success", t.success},
       {"system_turns", t.system_turns},
       {"reward", t.reward}};
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"n_episodes", r.n_episodes},
       {"successes", r.successes},
       {"success_rate", r.success_rate},
       {"avg_turns", r.avg_turns},
       {"avg_reward", r.avg_reward}};
}

void write_transcripts(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : report.episodes) out << nlohmann::json(e).dump() << '\n';
}

Rng episode_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

EvalReport evaluate(const SystemPolicy& policy, const UserSimulator& sim, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw UsageError("evaluation needs at least one episode");
  EvalReport report;
  report.n_episodes = n_episodes;
  double turns = 0.0;
  double reward = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    Rng rng = episode_rng(seed, static_cast<std::uint64_t>(i));
    Episode ep(sim, sample_goal(sim.schema(), sim.db(), rng));
    EpisodeTranscript t;
    t.goal = ep.state().goal;
    t.turns.push_back({"user", ep.observation().user_act});
    while (!ep.done()) {
      DialogueAct sys = policy(ep.observation(), ep.state(), rng);
      auto res = ep.advance(sys);
      t.turns.push_back({"system", std::move(sys)});
      t.reward += res.env_reward;
      if (!res.terminal || !res.user_act.empty()) t.turns.push_back({"user", res.user_act});
    }
    t.success = ep.state().success;
    t.system_turns = ep.state().system_turns;
    report.successes += t.success ? 1 : 0;
    turns += 2.0 * t.system_turns;
    reward += t.reward;
    report.episodes.push_back(std::move(t));
  }
  report.success_rate = static_cast<double>(report.successes) / n_episodes;
  report.avg_turns = turns / n_episodes;
  report.avg_reward = reward / n_episodes;
  return report;
}

EvalReport evaluate(const policy::ActorModel& actor, const UserSimulator& sim, int n_episodes, std::uint64_t seed) {
  SystemPolicy p = [&](const Observation& obs, const SimulatorState&, Rng& rng) {
    return policy::act(actor, sim.db(), obs, rng, policy::DecodeMode::kGreedy).act;
  };
  return evaluate(p, sim, n_episodes, seed);
}

}  // namespace dialogen::eval
