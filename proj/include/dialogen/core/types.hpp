#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/core/schema.hpp"

namespace dialogen {

// One (domain, intent, slot) triplet.
struct AtomicAct {
  std::string domain;
  std::string intent;
  std::string slot;

  auto operator<=>(const AtomicAct&) const = default;
};

struct ActQuad {
  std::string domain;
  std::string intent;
  std::string slot;
  std::string value;

  AtomicAct triplet() const { return {domain, intent, slot}; }
  auto operator<=>(const ActQuad&) const = default;
};

struct DialogueAct {
  std::vector<ActQuad> quads;

  bool empty() const { return quads.empty(); }
  std::vector<AtomicAct> triplets() const;
  bool operator==(const DialogueAct&) const = default;
};

struct BeliefSlot {
  std::string domain;
  std::string slot;
  std::string value;

  bool operator==(const BeliefSlot&) const = default;
};

// Tracked user constraints, ordered by first mention.
struct BeliefState {
  std::vector<BeliefSlot> triplets;

  // Constraints for one domain, slot -> value.
  std::map<std::string, std::string> constraints(const std::string& domain) const;
  // Domains in first-mention order.
  std::vector<std::string> domains() const;
  // Insert or overwrite in place (position of first mention is kept).
  void set(const std::string& domain, const std::string& slot, const std::string& value);
  bool operator==(const BeliefState&) const = default;
};

struct UserGoal {
  std::map<std::string, std::map<std::string, std::string>> constraints;
  std::map<std::string, std::set<std::string>> requests;

  std::set<std::string> domains() const;
  bool operator==(const UserGoal&) const = default;
};

struct DbResultSummary {
  std::vector<std::pair<std::string, int>> counts;
  bool operator==(const DbResultSummary&) const = default;
};

// The four linearized texts observed by the policy (without the classifier token).
struct DialogueStateText {
  std::vector<std::string> user_act;
  std::vector<std::string> system_act;
  std::vector<std::string> belief;
  std::vector<std::string> db;

  bool operator==(const DialogueStateText&) const = default;
};

// Validation, each throws ValidationError naming the offending field.
void validate_triplet(const Schema& schema, const AtomicAct& act);
void validate_act(const Schema& schema, const DialogueAct& act);
void validate_belief(const Schema& schema, const BeliefState& belief);
void validate_goal(const Schema& schema, const UserGoal& goal);
void validate_db_summary(const Schema& schema, const DbResultSummary& summary);

// Folds user informs into the belief (act-level state tracking).
void track_belief(BeliefState& belief, const DialogueAct& user_act);

// JSON forms: acts as [[d,i,s,v],...], belief as [[d,s,v],...],
// goal as {"constraints":{d:{s:v}},"requests":{d:[s]}}, db as [[d,n],...].
nlohmann::json to_json(const DialogueAct& act);
nlohmann::json to_json(const BeliefState& belief);
nlohmann::json to_json(const UserGoal& goal);
nlohmann::json to_json(const DbResultSummary& summary);
nlohmann::json to_json(const DialogueStateText& text);
DialogueAct act_from_json(const nlohmann::json& j);
BeliefState belief_from_json(const nlohmann::json& j);
UserGoal goal_from_json(const nlohmann::json& j);
DbResultSummary db_summary_from_json(const nlohmann::json& j);
DialogueStateText state_text_from_json(const nlohmann::json& j);

std::string to_string(const DialogueAct& act);

}  // namespace dialogen
