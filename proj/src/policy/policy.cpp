#include "dialogen/policy/policy.hpp"

#include <algorithm>

#include "dialogen/core/error.hpp"

namespace dialogen::policy {

WordActor::WordActor(Schema schema, nn::ModelConfig config, std::uint64_t seed)
    : schema_(std::move(schema)), net_(config, nn::Vocabulary(schema_), seed) {}

WordActor::WordActor(Schema schema, nn::ActorNet net) : schema_(std::move(schema)), net_(std::move(net)) {
  if (net_.vocab().tokens() != nn::Vocabulary(schema_).tokens()) {
    throw ValidationError("actor vocabulary does not match the schema");
  }
}

std::optional<std::vector<int>> WordActor::target(const DialogueAct& act) const {
  auto ids = net_.vocab().encode(linearize_target(schema_, act));
  if (static_cast<int>(ids.size()) > net_.config().max_decode_len) return std::nullopt;
  return ids;
}

nn::Var WordActor::token_log_probs(nn::Tape& tape, const EncodedState& state, std::span<const int> action) {
  return net_.token_log_probs(tape, state, action);
}

double WordActor::score(const EncodedState& state, std::span<const int> action) const {
  return net_.score(state, action);
}

nn::ActionSample WordActor::sample(const EncodedState& state, Rng& rng, DecodeMode mode) const {
  return net_.sample(state, rng, mode);
}

ParseReport WordActor::interpret(std::span<const int> action) const {
  const auto toks = surface(action);
  return parse_act_text(toks, schema_);
}

std::vector<std::string> WordActor::surface(std::span<const int> action) const {
  return net_.vocab().decode(action);
}

nlohmann::json WordActor::header() const {
  return {{"kind", kind()}, {"model", net_.config()}, {"vocabulary", net_.vocab().tokens()}};
}

PolicyDecision act(const ActorModel& actor, const Database& db, const DialogueAct& user_act,
                   const DialogueAct& last_system_act, const BeliefState& belief,
                   const DbResultSummary& db_counts, Rng& rng, DecodeMode mode) {
  PolicyDecision d;
  d.state = build_state_text(actor.schema(), user_act, last_system_act, belief, db_counts);
  d.encoded = actor.encode(d.state);
  auto sample = actor.sample(d.encoded, rng, mode);
  d.action = std::move(sample.tokens);
  d.log_prob = sample.log_prob;
  d.truncated = sample.truncated;
  d.tokens = actor.surface(d.action);
  d.parse = actor.interpret(d.action);
  d.act = populate_values(d.parse.triplets, db, belief);
  return d;
}

PolicyDecision act(const ActorModel& actor, const Database& db, const Observation& obs, Rng& rng,
                   DecodeMode mode) {
  return act(actor, db, obs.user_act, obs.last_system_act, obs.belief, obs.db, rng, mode);
}

double score(const ActorModel& actor, const DialogueStateText& state, std::span<const std::string> act_tokens) {
  if (actor.kind() != "word") throw UsageError("token scoring needs a word-level actor");
  auto end = std::find(act_tokens.begin(), act_tokens.end(), std::string(kEndToken));
  std::vector<std::string> used(act_tokens.begin(), end == act_tokens.end() ? end : end + 1);
  if (end == act_tokens.end() && static_cast<int>(used.size()) != actor.config().max_decode_len) {
    throw UsageError("action tokens must end with the end token");
  }
  std::vector<int> ids;
  ids.reserve(used.size());
  for (const auto& t : used) {
    const int id = actor.vocab().id(t);
    if (id == nn::Vocabulary::kUnk && t != kUnkToken) throw ValidationError("token '" + t + "' is not in the vocabulary");
    ids.push_back(id);
  }
  return actor.score(actor.encode(state), ids);
}

}  // namespace dialogen::policy
