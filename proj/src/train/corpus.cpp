#include "dialogen/train/corpus.hpp"

#include <fstream>

#include "dialogen/core/error.hpp"

namespace dialogen::train {

nlohmann::json to_json(const CorpusRecord& r) {
  return {{"user_act", dialogen::to_json(r.user_act)},
          {"system_act_prev", dialogen::to_json(r.system_act_prev)},
          {"belief", dialogen::to_json(r.belief)},
          {"db", dialogen::to_json(r.db)},
          {"target_act", dialogen::to_json(r.target_act)}};
}

CorpusRecord corpus_record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("corpus record must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "user_act" && key != "system_act_prev" && key != "belief" && key != "db" && key != "target_act") {
      throw ParseError("unknown corpus field '" + key + "'");
    }
  }
  CorpusRecord r;
  r.user_act = act_from_json(j.at("user_act"));
  r.system_act_prev = act_from_json(j.at("system_act_prev"));
  r.belief = belief_from_json(j.at("belief"));
  r.db = db_summary_from_json(j.at("db"));
  r.target_act = act_from_json(j.at("target_act"));
  return r;
}

std::vector<CorpusRecord> generate_expert_data(const UserSimulator& sim, const OraclePolicy& oracle, int n_turns,
                                               std::uint64_t seed) {
  if (n_turns < 0) throw UsageError("n_turns must be non-negative");
  std::vector<CorpusRecord> out;
  out.reserve(static_cast<std::size_t>(n_turns));
  Rng rng(seed);
  while (static_cast<int>(out.size()) < n_turns) {
    Episode ep(sim, sample_goal(sim.schema(), sim.db(), rng));
    while (!ep.done() && static_cast<int>(out.size()) < n_turns) {
      const Observation& obs = ep.observation();
      if (obs.user_act.empty()) break;
      DialogueAct target = oracle.act(obs, ep.state(), rng);
      out.push_back({obs.user_act, obs.last_system_act, obs.belief, obs.db, target});
      ep.advance(target);
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  std::vector<CorpusRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      CorpusRecord r = corpus_record_from_json(nlohmann::json::parse(line));
      validate_act(schema, r.user_act);
      validate_act(schema, r.system_act_prev);
      validate_belief(schema, r.belief);
      validate_db_summary(schema, r.db);
      validate_act(schema, r.target_act);
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dialogen::train
