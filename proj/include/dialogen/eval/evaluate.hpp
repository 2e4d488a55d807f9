#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/policy/policy.hpp"
#include "dialogen/simulator/simulator.hpp"

namespace dialogen::eval {

struct TranscriptTurn {
  std::string speaker;  // "user" or "system"
  DialogueAct act;
};

struct EpisodeTranscript {
  UserGoal goal;
  std::vector<TranscriptTurn> turns;
  bool success = false;
  int system_turns = 0;
  double reward = 0.0;  // unshaped
};

struct EvalReport {
  int n_episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double avg_turns = 0.0;  // utterances; one exchange counts 2
  double avg_reward = 0.0;
  std::vector<EpisodeTranscript> episodes;
};

void to_json(nlohmann::json& j, const EpisodeTranscript& t);
// Summary fields only; transcripts go to their own JSONL file.
void to_json(nlohmann::json& j, const EvalReport& r);
void write_transcripts(const std::filesystem::path& path, const EvalReport& report);

using SystemPolicy = std::function<DialogueAct(const Observation&, const SimulatorState&, Rng&)>;

// Per-episode generator seeded from (seed, index).
Rng episode_rng(std::uint64_t seed, std::uint64_t index);

EvalReport evaluate(const SystemPolicy& policy, const UserSimulator& sim, int n_episodes, std::uint64_t seed);
// Greedy decoding.
EvalReport evaluate(const policy::ActorModel& actor, const UserSimulator& sim, int n_episodes, std::uint64_t seed);

}  // namespace dialogen::eval
