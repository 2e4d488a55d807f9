#include "dialogen/simulator/simulator.hpp"

#include <algorithm>
#include <tuple>

#include "dialogen/actgrammar/interpreter.hpp"
#include "dialogen/core/error.hpp"

namespace dialogen {

void RewardConfig::validate() const {
  if (max_turns < 2 || max_turns % 2 != 0) {
    throw ValidationError("reward.max_turns must be even and >= 2, got " + std::to_string(max_turns));
  }
  if (!(lambda > 0.0)) throw ValidationError("reward.lambda must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("reward.gamma must be in [0, 1]");
}

void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = {{"per_turn", c.per_turn},   {"success_bonus", c.success_bonus},
       {"failure_penalty", c.failure_penalty}, {"max_turns", c.max_turns},
       {"lambda", c.lambda},       {"gamma", c.gamma}};
}

void from_json(const nlohmann::json& j, RewardConfig& c) {
  c.per_turn = j.value("per_turn", c.per_turn);
  c.success_bonus = j.value("success_bonus", c.success_bonus);
  c.failure_penalty = j.value("failure_penalty", c.failure_penalty);
  c.max_turns = j.value("max_turns", c.max_turns);
  c.lambda = j.value("lambda", c.lambda);
  c.gamma = j.value("gamma", c.gamma);
}

void to_json(nlohmann::json& j, const OracleOptions& o) {
  j = {{"elicit_constraints", o.elicit_constraints},
       {"answer_cap", o.answer_cap},
       {"cap_probability", o.cap_probability}};
}

void from_json(const nlohmann::json& j, OracleOptions& o) {
  o.elicit_constraints = j.value("elicit_constraints", o.elicit_constraints);
  o.answer_cap = j.value("answer_cap", o.answer_cap);
  o.cap_probability = j.value("cap_probability", o.cap_probability);
}

// --- agenda -----------------------------------------------------------------

void Agenda::push(ActQuad item) {
  remove(item.domain, item.intent, item.slot);
  items_.push_back(std::move(item));
}

std::optional<ActQuad> Agenda::pop() {
  if (items_.empty()) return std::nullopt;
  ActQuad top = std::move(items_.back());
  items_.pop_back();
  return top;
}

void Agenda::remove(const std::string& domain, const std::string& intent, const std::string& slot) {
  std::erase_if(items_, [&](const ActQuad& q) {
    return q.domain == domain && q.intent == intent && q.slot == slot;
  });
}

Agenda init_agenda(const UserGoal& goal) {
  Agenda agenda;
  std::vector<ActQuad> requests;
  std::vector<ActQuad> informs;
  for (const auto& [d, slots] : goal.requests) {
    for (const auto& s : slots) requests.push_back({d, std::string(kRequestIntent), s, std::string(kRequestValue)});
  }
  for (const auto& [d, cons] : goal.constraints) {
    for (const auto& [s, v] : cons) informs.push_back({d, std::string(kInformIntent), s, v});
  }
  // std::map iteration is already (domain, slot) ordered; push in reverse so the
  // lexicographically first item ends up on top of its group.
  for (auto it = requests.rbegin(); it != requests.rend(); ++it) agenda.push(*it);
  for (auto it = informs.rbegin(); it != informs.rend(); ++it) agenda.push(*it);
  return agenda;
}

// --- goals ------------------------------------------------------------------

UserGoal sample_goal(const Schema& schema, const Database& db, Rng& rng, int max_attempts) {
  const auto& domains = schema.domains();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<std::string> pool = domains;
    const std::size_t n_domains = std::min<std::size_t>(pool.size(), 1 + (unit(rng) < 0.5 ? 0 : 1));
    std::vector<std::string> chosen;
    for (std::size_t k = 0; k < n_domains; ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t idx = pick(rng);
      chosen.push_back(pool[idx]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    std::sort(chosen.begin(), chosen.end());

    UserGoal goal;
    for (const auto& d : chosen) {
      const auto& ds = schema.domain(d);
      auto weight = [&](const std::string& s) {
        auto it = ds.goal_slot_weights.find(s);
        return it == ds.goal_slot_weights.end() ? 0.0 : std::clamp(it->second, 0.0, 1.0);
      };
      for (const auto& s : ds.informable) {
        const auto& vocab = ds.slots.at(s);
        if (vocab.empty()) continue;
        if (unit(rng) < weight(s)) {
          std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
          goal.constraints[d][s] = vocab[pick(rng)];
        }
      }
      for (const auto& s : ds.requestable) {
        if (goal.constraints.contains(d) && goal.constraints[d].contains(s)) continue;
        if (unit(rng) < weight(s)) goal.requests[d].insert(s);
      }
    }

    std::size_t n_cons = 0;
    std::size_t n_reqs = 0;
    for (const auto& [_, c] : goal.constraints) n_cons += c.size();
    for (const auto& [_, r] : goal.requests) n_reqs += r.size();
    if (n_cons == 0 || n_reqs == 0) continue;
    bool satisfiable = true;
    for (const auto& [d, c] : goal.constraints) {
      if (db.query(d, c).empty()) {
        satisfiable = false;
        break;
      }
    }
    if (satisfiable) return goal;
  }
  throw ValidationError("unsatisfiable schema weights");
}

// --- simulator --------------------------------------------------------------

bool SimulatorState::goal_complete() const {
  for (const auto& [d, reqs] : goal.requests) {
    auto it = fulfilled_requests.find(d);
    for (const auto& s : reqs) {
      if (it == fulfilled_requests.end() || !it->second.contains(s)) return false;
    }
  }
  for (const auto& [d, cons] : goal.constraints) {
    auto it = informed_constraints.find(d);
    for (const auto& [s, _] : cons) {
      if (it == informed_constraints.end() || !it->second.contains(s)) return false;
    }
  }
  return true;
}

double shaping_bonus(const UserGoal& goal, const DialogueAct& system_act, ShapingState& shaping,
                     double lambda) {
  double f = 0.0;
  for (const auto& q : system_act.quads) {
    bool relevant = false;
    if (q.intent == kInformIntent) {
      auto it = goal.requests.find(q.domain);
      relevant = it != goal.requests.end() && it->second.contains(q.slot);
    } else if (q.intent == kRequestIntent) {
      auto it = goal.constraints.find(q.domain);
      relevant = it != goal.constraints.end() && it->second.contains(q.slot);
    } else {
      continue;
    }
    if (relevant && shaping.rewarded.emplace(q.intent, q.domain, q.slot).second) {
      f += lambda;
    } else {
      f -= 1.0;
    }
  }
  return f;
}

UserSimulator::UserSimulator(const Schema& schema, const Database& db, RewardConfig config)
    : schema_(&schema), db_(&db), config_(config) {
  config_.validate();
}

std::pair<SimulatorState, DialogueAct> UserSimulator::start(const UserGoal& goal) const {
  validate_goal(*schema_, goal);
  SimulatorState state;
  state.goal = goal;
  state.agenda = init_agenda(goal);
  DialogueAct first = pop_user_act(state);
  return {std::move(state), std::move(first)};
}

DialogueAct UserSimulator::pop_user_act(SimulatorState& state) const {
  DialogueAct act;
  while (act.quads.size() < static_cast<std::size_t>(kActsPerTurn)) {
    auto item = state.agenda.pop();
    if (!item) break;
    if (item->intent == kInformIntent) {
      state.informed_constraints[item->domain].insert(item->slot);
    }
    act.quads.push_back(std::move(*item));
  }
  state.turn_index += 1;
  return act;
}

StepResult UserSimulator::step(SimulatorState& state, const DialogueAct& system_act) const {
  if (state.terminal) throw UsageError("step() called on a terminated dialogue");
  state.turn_index += 1;
  state.system_turns += 1;

  for (const auto& q : system_act.quads) {
    auto cons_it = state.goal.constraints.find(q.domain);
    const bool constrained = cons_it != state.goal.constraints.end() && cons_it->second.contains(q.slot);
    if (q.intent == kRequestIntent && constrained) {
      state.agenda.push({q.domain, std::string(kInformIntent), q.slot, cons_it->second.at(q.slot)});
    } else if (q.intent == kInformIntent) {
      auto req_it = state.goal.requests.find(q.domain);
      if (req_it != state.goal.requests.end() && req_it->second.contains(q.slot) && q.value != kNoneValue) {
        state.fulfilled_requests[q.domain].insert(q.slot);
        state.agenda.remove(q.domain, std::string(kRequestIntent), q.slot);
      } else if (constrained && q.value != kNoneValue && q.value != cons_it->second.at(q.slot)) {
        state.agenda.push({q.domain, std::string(kInformIntent), q.slot, cons_it->second.at(q.slot)});
      }
    }
  }

  StepResult result;
  if (state.goal_complete()) {
    state.terminal = true;
    state.success = true;
    const std::string domain = *state.goal.domains().begin();
    if (schema_->has_intent(kByeIntent) && schema_->has_slot(domain, kNoneValue)) {
      result.user_act.quads.push_back(
          {domain, std::string(kByeIntent), std::string(kNoneValue), std::string(kNoneValue)});
    }
  } else if (state.turn_index >= config_.max_turns) {
    state.terminal = true;
    state.success = false;
  } else {
    result.user_act = pop_user_act(state);
  }
  result.terminal = state.terminal;
  result.success = state.success;
  result.env_reward = env_reward(state);
  return result;
}

double UserSimulator::env_reward(const SimulatorState& state) const {
  double r = config_.per_turn;
  if (state.terminal) r += state.success ? config_.success_bonus : config_.failure_penalty;
  return r;
}

// --- oracle -----------------------------------------------------------------

OraclePolicy::OraclePolicy(const Schema& schema, const Database& db, OracleOptions options)
    : schema_(&schema), db_(&db), options_(options) {}

DialogueAct OraclePolicy::act(const Observation& obs, const SimulatorState& sim, Rng& rng) const {
  std::vector<AtomicAct> triplets;
  for (const auto& q : obs.user_act.quads) {
    if (q.intent != kRequestIntent) continue;
    AtomicAct a{q.domain, std::string(kInformIntent), q.slot};
    if (std::find(triplets.begin(), triplets.end(), a) == triplets.end()) triplets.push_back(std::move(a));
  }
  if (options_.answer_cap > 0 && triplets.size() > static_cast<std::size_t>(options_.answer_cap)) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < options_.cap_probability) triplets.resize(static_cast<std::size_t>(options_.answer_cap));
  }
  if (options_.elicit_constraints) {
    for (const auto& [d, cons] : sim.goal.constraints) {
      auto it = sim.informed_constraints.find(d);
      for (const auto& [s, _] : cons) {
        if (it != sim.informed_constraints.end() && it->second.contains(s)) continue;
        triplets.push_back({d, std::string(kRequestIntent), s});
      }
    }
  }
  return populate_values(triplets, *db_, obs.belief);
}

// --- episode ----------------------------------------------------------------

Episode::Episode(const UserSimulator& sim, UserGoal goal) : sim_(&sim) {
  auto [state, first] = sim.start(goal);
  state_ = std::move(state);
  obs_.user_act = std::move(first);
  track_belief(obs_.belief, obs_.user_act);
  obs_.db = match_counts(sim.db(), obs_.belief);
}

StepResult Episode::advance(const DialogueAct& system_act) {
  StepResult r = sim_->step(state_, system_act);
  obs_.last_system_act = system_act;
  obs_.user_act = r.user_act;
  track_belief(obs_.belief, obs_.user_act);
  obs_.db = match_counts(sim_->db(), obs_.belief);
  return r;
}

}  // namespace dialogen
