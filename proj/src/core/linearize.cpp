#include "dialogen/core/linearize.hpp"

#include <algorithm>
#include <set>

#include "dialogen/core/error.hpp"

namespace dialogen {

TokenSeq linearize_acts(const Schema& schema, std::span<const AtomicAct> acts) {
  TokenSeq out;
  out.reserve(acts.size() * 3);
  for (const auto& a : acts) {
    validate_triplet(schema, a);
    out.push_back(a.domain);
    out.push_back(a.intent);
    out.push_back(a.slot);
  }
  return out;
}

TokenSeq linearize_acts(const Schema& schema, const DialogueAct& act) {
  const auto t = act.triplets();
  return linearize_acts(schema, std::span<const AtomicAct>(t));
}

TokenSeq linearize_belief(const Schema& schema, const BeliefState& belief) {
  validate_belief(schema, belief);
  TokenSeq out;
  for (const auto& t : belief.triplets) {
    out.push_back(t.domain);
    out.push_back(t.slot);
    for (auto& v : split_whitespace(t.value)) out.push_back(std::move(v));
  }
  return out;
}

TokenSeq linearize_db(const Schema& schema, const DbResultSummary& summary) {
  validate_db_summary(schema, summary);
  TokenSeq out;
  for (const auto& [d, n] : summary.counts) {
    out.push_back(d);
    out.push_back(count_token(n));
  }
  return out;
}

DialogueStateText build_state_text(const Schema& schema, const DialogueAct& user_act,
                                   const DialogueAct& system_act, const BeliefState& belief,
                                   const DbResultSummary& db) {
  auto map_unknown = [&](TokenSeq seq) {
    for (auto& t : seq) {
      if (!schema.is_token(t)) t = std::string(kUnkToken);
    }
    return seq;
  };
  DialogueStateText text;
  text.user_act = map_unknown(linearize_acts(schema, user_act));
  text.system_act = map_unknown(linearize_acts(schema, system_act));
  text.belief = map_unknown(linearize_belief(schema, belief));
  text.db = map_unknown(linearize_db(schema, db));
  return text;
}

}  // namespace dialogen
