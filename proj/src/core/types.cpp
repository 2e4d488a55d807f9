#include "dialogen/core/types.hpp"

#include <algorithm>

#include "dialogen/core/error.hpp"

namespace dialogen {

std::vector<AtomicAct> DialogueAct::triplets() const {
  std::vector<AtomicAct> out;
  out.reserve(quads.size());
  for (const auto& q : quads) out.push_back(q.triplet());
  return out;
}

std::map<std::string, std::string> BeliefState::constraints(const std::string& domain) const {
  std::map<std::string, std::string> out;
  for (const auto& t : triplets) {
    if (t.domain == domain) out[t.slot] = t.value;
  }
  return out;
}

std::vector<std::string> BeliefState::domains() const {
  std::vector<std::string> out;
  for (const auto& t : triplets) {
    if (std::find(out.begin(), out.end(), t.domain) == out.end()) out.push_back(t.domain);
  }
  return out;
}

void BeliefState::set(const std::string& domain, const std::string& slot, const std::string& value) {
  for (auto& t : triplets) {
    if (t.domain == domain && t.slot == slot) {
      t.value = value;
      return;
    }
  }
  triplets.push_back({domain, slot, value});
}

std::set<std::string> UserGoal::domains() const {
  std::set<std::string> out;
  for (const auto& [d, _] : constraints) out.insert(d);
  for (const auto& [d, _] : requests) out.insert(d);
  return out;
}

void validate_triplet(const Schema& schema, const AtomicAct& act) {
  if (!schema.has_domain(act.domain)) throw ValidationError("unknown domain '" + act.domain + "'");
  if (!schema.has_intent(act.intent)) throw ValidationError("unknown intent '" + act.intent + "'");
  if (!schema.has_slot(act.domain, act.slot)) {
    throw ValidationError("unknown slot '" + act.slot + "' for domain '" + act.domain + "'");
  }
}

void validate_act(const Schema& schema, const DialogueAct& act) {
  for (const auto& q : act.quads) {
    validate_triplet(schema, q.triplet());
    if (q.intent == kRequestIntent && q.value != kRequestValue) {
      throw ValidationError("request of slot '" + q.slot + "' must carry value '?'");
    }
    if (q.value.empty()) throw ValidationError("empty value for slot '" + q.slot + "'");
  }
}

void validate_belief(const Schema& schema, const BeliefState& belief) {
  for (const auto& t : belief.triplets) {
    if (!schema.has_domain(t.domain)) throw ValidationError("unknown domain '" + t.domain + "'");
    if (!schema.has_slot(t.domain, t.slot)) {
      throw ValidationError("unknown slot '" + t.slot + "' for domain '" + t.domain + "'");
    }
    if (t.value != kUnkToken && !schema.has_value(t.domain, t.slot, t.value)) {
      throw ValidationError("value '" + t.value + "' not in vocabulary of slot '" + t.slot + "'");
    }
  }
}

void validate_goal(const Schema& schema, const UserGoal& goal) {
  if (goal.domains().empty()) throw ValidationError("goal has no domain");
  for (const auto& [d, cons] : goal.constraints) {
    if (!schema.has_domain(d)) throw ValidationError("goal: unknown domain '" + d + "'");
    for (const auto& [s, v] : cons) {
      if (!schema.is_informable(d, s)) throw ValidationError("goal: constraint slot '" + s + "' not informable");
      if (!schema.has_value(d, s, v)) throw ValidationError("goal: value '" + v + "' not in vocabulary of '" + s + "'");
    }
  }
  for (const auto& [d, reqs] : goal.requests) {
    if (!schema.has_domain(d)) throw ValidationError("goal: unknown domain '" + d + "'");
    for (const auto& s : reqs) {
      if (!schema.is_requestable(d, s)) throw ValidationError("goal: request slot '" + s + "' not requestable");
      auto it = goal.constraints.find(d);
      if (it != goal.constraints.end() && it->second.contains(s)) {
        throw ValidationError("goal: slot '" + s + "' is both constraint and request");
      }
    }
  }
}

void validate_db_summary(const Schema& schema, const DbResultSummary& summary) {
  std::set<std::string> seen;
  for (const auto& [d, n] : summary.counts) {
    if (!schema.has_domain(d)) throw ValidationError("db summary: unknown domain '" + d + "'");
    if (n < 0) throw ValidationError("db summary: negative count for '" + d + "'");
    if (!seen.insert(d).second) throw ValidationError("db summary: duplicate domain '" + d + "'");
  }
}

void track_belief(BeliefState& belief, const DialogueAct& user_act) {
  for (const auto& q : user_act.quads) {
    if (q.intent == kInformIntent && q.value != kNoneValue && q.value != kRequestValue) {
      belief.set(q.domain, q.slot, q.value);
    }
  }
}

nlohmann::json to_json(const DialogueAct& act) {
  auto j = nlohmann::json::array();
  for (const auto& q : act.quads) j.push_back({q.domain, q.intent, q.slot, q.value});
  return j;
}

nlohmann::json to_json(const BeliefState& belief) {
  auto j = nlohmann::json::array();
  for (const auto& t : belief.triplets) j.push_back({t.domain, t.slot, t.value});
  return j;
}

nlohmann::json to_json(const UserGoal& goal) {
  nlohmann::json j;
  j["constraints"] = goal.constraints;
  j["requests"] = goal.requests;
  return j;
}

nlohmann::json to_json(const DbResultSummary& summary) {
  auto j = nlohmann::json::array();
  for (const auto& [d, n] : summary.counts) j.push_back({d, n});
  return j;
}

nlohmann::json to_json(const DialogueStateText& text) {
  return {{"user_act", text.user_act},
          {"system_act", text.system_act},
          {"belief", text.belief},
          {"db", text.db}};
}

namespace {

void expect_array(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be a JSON array");
}

}  // namespace

DialogueAct act_from_json(const nlohmann::json& j) {
  expect_array(j, "dialogue act");
  DialogueAct act;
  for (const auto& q : j) {
    if (!q.is_array() || q.size() != 4) throw ParseError("dialogue act entries must be [domain, intent, slot, value]");
    act.quads.push_back({q[0].get<std::string>(), q[1].get<std::string>(), q[2].get<std::string>(),
                         q[3].get<std::string>()});
  }
  return act;
}

BeliefState belief_from_json(const nlohmann::json& j) {
  expect_array(j, "belief");
  BeliefState b;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3) throw ParseError("belief entries must be [domain, slot, value]");
    b.triplets.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
  }
  return b;
}

UserGoal goal_from_json(const nlohmann::json& j) {
  UserGoal g;
  if (j.contains("constraints")) g.constraints = j.at("constraints").get<decltype(g.constraints)>();
  if (j.contains("requests")) g.requests = j.at("requests").get<decltype(g.requests)>();
  return g;
}

DbResultSummary db_summary_from_json(const nlohmann::json& j) {
  expect_array(j, "db summary");
  DbResultSummary s;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ParseError("db summary entries must be [domain, count]");
    s.counts.emplace_back(e[0].get<std::string>(), e[1].get<int>());
  }
  return s;
}

DialogueStateText state_text_from_json(const nlohmann::json& j) {
  DialogueStateText t;
  t.user_act = j.at("user_act").get<std::vector<std::string>>();
  t.system_act = j.at("system_act").get<std::vector<std::string>>();
  t.belief = j.at("belief").get<std::vector<std::string>>();
  t.db = j.at("db").get<std::vector<std::string>>();
  return t;
}

std::string to_string(const DialogueAct& act) {
  std::string out = "[";
  for (std::size_t i = 0; i < act.quads.size(); ++i) {
    const auto& q = act.quads[i];
    if (i) out += ", ";
    out += "(" + q.domain + ", " + q.intent + ", " + q.slot + ", " + q.value + ")";
  }
  return out + "]";
}

}  // namespace dialogen
