#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dialogen/core/linearize.hpp"
#include "dialogen/core/schema.hpp"
#include "dialogen/core/types.hpp"
#include "dialogen/db/database.hpp"

namespace dialogen {

struct Discard {
  std::size_t position;
  std::string token;
  std::string reason;

  bool operator==(const Discard&) const = default;
};

struct ParseReport {
  std::vector<AtomicAct> triplets;
  std::vector<Discard> discarded;  // sorted by position
  bool terminated_by_end = false;
};

// Greedy domain -> intent -> slot scan over decoder output. Never throws:
// tokens that do not fit the expected role are discarded with a reason, and
// a domain token arriving mid-triplet restarts the triplet. Identical
// triplets are kept once. Scanning stops at the first end token.
ParseReport parse_act_text(std::span<const std::string> tokens, const Schema& schema);

// Request triplets carry "?"; inform triplets take the slot value of the
// first entity matching the belief constraints of their domain ("none" when
// nothing matches or the entity lacks the slot); other intents carry "none".
DialogueAct populate_values(std::span<const AtomicAct> triplets, const Database& db,
                            const BeliefState& belief);

// D I S per quadruple followed by the end token (values are not generated).
TokenSeq linearize_target(const Schema& schema, const DialogueAct& act);

// Inverse of linearize_belief. Consecutive tokens after "domain slot" form
// the value until the next "domain slot" pair begins.
BeliefState parse_belief_text(std::span<const std::string> tokens, const Schema& schema);

// Inverse of linearize_db; the bucket token "10+" reads back as 10.
DbResultSummary parse_db_text(std::span<const std::string> tokens, const Schema& schema);

}  // namespace dialogen
