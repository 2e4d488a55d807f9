#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/core/types.hpp"
#include "dialogen/simulator/simulator.hpp"

namespace dialogen::train {

// One expert system turn.
struct CorpusRecord {
  DialogueAct user_act;
  DialogueAct system_act_prev;
  BeliefState belief;
  DbResultSummary db;
  DialogueAct target_act;

  bool operator==(const CorpusRecord&) const = default;
};

nlohmann::json to_json(const CorpusRecord& r);
CorpusRecord corpus_record_from_json(const nlohmann::json& j);

// Runs the oracle against the simulator and records (state, act) pairs until
// n_turns records exist. An episode stops contributing once the user has
// nothing left to say.
std::vector<CorpusRecord> generate_expert_data(const UserSimulator& sim, const OraclePolicy& oracle, int n_turns,
                                               std::uint64_t seed);

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
// Validates every record against the schema; reports the line number on failure.
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path, const Schema& schema);

}  // namespace dialogen::train
