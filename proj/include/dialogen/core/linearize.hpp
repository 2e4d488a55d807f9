#pragma once

#include <span>
#include <string>
#include <vector>

#include "dialogen/core/schema.hpp"
#include "dialogen/core/types.hpp"

namespace dialogen {

using TokenSeq = std::vector<std::string>;

// D1 I1 S1 ... DN IN SN
TokenSeq linearize_acts(const Schema& schema, std::span<const AtomicAct> acts);
TokenSeq linearize_acts(const Schema& schema, const DialogueAct& act);

// D1 S1 V1 ... with multi-word values split on whitespace.
TokenSeq linearize_belief(const Schema& schema, const BeliefState& belief);

// D1 Q1 ... with counts >= 10 bucketed to "10+".
TokenSeq linearize_db(const Schema& schema, const DbResultSummary& summary);

// Linearizes all four state components. Tokens outside the schema's token set
// become the unknown marker.
DialogueStateText build_state_text(const Schema& schema, const DialogueAct& user_act,
                                   const DialogueAct& system_act, const BeliefState& belief,
                                   const DbResultSummary& db);

}  // namespace dialogen
