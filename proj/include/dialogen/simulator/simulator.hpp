#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/core/schema.hpp"
#include "dialogen/core/types.hpp"
#include "dialogen/db/database.hpp"

namespace dialogen {

using Rng = std::mt19937_64;

struct RewardConfig {
  double per_turn = -1.0;
  double success_bonus = 80.0;
  double failure_penalty = -40.0;
  int max_turns = 40;
  double lambda = 3.0;
  double gamma = 0.99;

  void validate() const;
};

void to_json(nlohmann::json& j, const RewardConfig& c);
void from_json(const nlohmann::json& j, RewardConfig& c);

// LIFO stack of pending user acts. back() is the top.
class Agenda {
 public:
  // Pushes to the top; an item with the same (domain, intent, slot) is moved.
  void push(ActQuad item);
  std::optional<ActQuad> pop();
  // Drops pending items matching (domain, intent, slot).
  void remove(const std::string& domain, const std::string& intent, const std::string& slot);

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const ActQuad& top() const { return items_.back(); }
  // Bottom to top.
  const std::vector<ActQuad>& items() const { return items_; }

  bool operator==(const Agenda&) const = default;

 private:
  std::vector<ActQuad> items_;
};

// Requests first, then constraint informs, so that informs pop first; within
// each group items pop in (domain, slot) lexicographic order.
Agenda init_agenda(const UserGoal& goal);

// Samples 1-2 domains uniformly; each informable slot becomes a constraint with
// probability min(weight, 1) and a uniform value, each remaining requestable
// slot becomes a request likewise. Resamples until the goal has a constraint
// and a request and every constrained domain has a matching entity.
UserGoal sample_goal(const Schema& schema, const Database& db, Rng& rng, int max_attempts = 1000);

struct SimulatorState {
  UserGoal goal;
  Agenda agenda;
  std::map<std::string, std::set<std::string>> fulfilled_requests;
  std::map<std::string, std::set<std::string>> informed_constraints;
  int turn_index = 0;  // utterances so far, user and system alike
  int system_turns = 0;
  bool terminal = false;
  bool success = false;

  bool goal_complete() const;
};

// Tracks which goal slots already earned a shaping bonus this dialogue.
struct ShapingState {
  std::set<std::tuple<std::string, std::string, std::string>> rewarded;  // (intent, domain, slot)
};

// Per quadruple: inform of a requested slot or request of a constrained slot
// earns +lambda the first time and -1 afterwards; other informs and requests
// earn -1; other intents 0. Updates `shaping`.
double shaping_bonus(const UserGoal& goal, const DialogueAct& system_act, ShapingState& shaping,
                     double lambda);

struct StepResult {
  DialogueAct user_act;
  double env_reward = 0.0;
  bool terminal = false;
  bool success = false;
};

class UserSimulator {
 public:
  static constexpr int kActsPerTurn = 3;

  UserSimulator(const Schema& schema, const Database& db, RewardConfig config = {});

  // Opening user utterance for a goal.
  std::pair<SimulatorState, DialogueAct> start(const UserGoal& goal) const;
  // Applies the rule set to one system act. Throws UsageError on a terminal state.
  StepResult step(SimulatorState& state, const DialogueAct& system_act) const;

  // Reward for the system turn that produced `state` (after step).
  double env_reward(const SimulatorState& state) const;

  const Schema& schema() const { return *schema_; }
  const Database& db() const { return *db_; }
  const RewardConfig& config() const { return config_; }

 private:
  DialogueAct pop_user_act(SimulatorState& state) const;

  const Schema* schema_;
  const Database* db_;
  RewardConfig config_;
};

// What the system observes before choosing an act.
struct Observation {
  DialogueAct user_act;
  DialogueAct last_system_act;
  BeliefState belief;
  DbResultSummary db;
};

// Rule-based system policy with access to the user goal.
struct OracleOptions {
  // Request goal constraints the user has not yet conveyed.
  bool elicit_constraints = true;
  // When more than `answer_cap` requests are open in one turn, answer only the
  // first `answer_cap` of them with probability `cap_probability`. Used to
  // imitate the partial answers found in logged dialogue corpora.
  int answer_cap = 0;  // 0 = unlimited
  double cap_probability = 0.0;
};

void to_json(nlohmann::json& j, const OracleOptions& o);
void from_json(const nlohmann::json& j, OracleOptions& o);

class OraclePolicy {
 public:
  OraclePolicy(const Schema& schema, const Database& db, OracleOptions options = {});

  // Informs every slot requested in the current user act (in request order),
  // values from the database; optionally requests un-conveyed constraints.
  DialogueAct act(const Observation& obs, const SimulatorState& sim, Rng& rng) const;

 private:
  const Schema* schema_;
  const Database* db_;
  OracleOptions options_;
};

// One dialogue: simulator state plus the act-level state tracking that
// produces observations for the system.
class Episode {
 public:
  Episode(const UserSimulator& sim, UserGoal goal);

  const Observation& observation() const { return obs_; }
  const SimulatorState& state() const { return state_; }
  bool done() const { return state_.terminal; }

  // Sends one system act; updates belief and database counts from the reply.
  StepResult advance(const DialogueAct& system_act);

 private:
  const UserSimulator* sim_;
  SimulatorState state_;
  Observation obs_;
};

}  // namespace dialogen
