#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/actgrammar/interpreter.hpp"
#include "dialogen/core/linearize.hpp"
#include "dialogen/core/schema.hpp"
#include "dialogen/db/database.hpp"
#include "dialogen/neural/model.hpp"
#include "dialogen/simulator/simulator.hpp"

namespace dialogen::policy {

using nn::DecodeMode;
using nn::EncodedState;

// Trainable action model over an abstract action encoding (a token-id
// sequence). Warm-up, PPO and evaluation only talk to this interface.
class ActorModel {
 public:
  virtual ~ActorModel() = default;

  virtual std::string kind() const = 0;
  virtual std::unique_ptr<ActorModel> clone() const = 0;

  virtual const Schema& schema() const = 0;
  virtual const nn::ModelConfig& config() const = 0;
  virtual const nn::Vocabulary& vocab() const = 0;
  virtual nn::ParamStore& params() = 0;
  virtual const nn::ParamStore& params() const = 0;

  EncodedState encode(const DialogueStateText& text) const {
    return nn::encode_state(vocab(), text, config().max_text_len);
  }

  // Action encoding of an expert act; nullopt when the model cannot express it.
  virtual std::optional<std::vector<int>> target(const DialogueAct& act) const = 0;
  // Per-element log-probabilities of an action as an N x 1 column.
  virtual nn::Var token_log_probs(nn::Tape& tape, const EncodedState& state, std::span<const int> action) = 0;
  virtual double score(const EncodedState& state, std::span<const int> action) const = 0;
  virtual nn::ActionSample sample(const EncodedState& state, Rng& rng, DecodeMode mode) const = 0;
  // Triplets expressed by an action, with the surface tokens they came from.
  virtual ParseReport interpret(std::span<const int> action) const = 0;
  virtual std::vector<std::string> surface(std::span<const int> action) const = 0;

  // Model-specific checkpoint metadata.
  virtual nlohmann::json header() const = 0;
};

// The generative policy: emits "D I S ... [end]" token by token.
class WordActor final : public ActorModel {
 public:
  WordActor(Schema schema, nn::ModelConfig config, std::uint64_t seed);
  WordActor(Schema schema, nn::ActorNet net);

  std::string kind() const override { return "word"; }
  std::unique_ptr<ActorModel> clone() const override { return std::make_unique<WordActor>(*this); }

  const Schema& schema() const override { return schema_; }
  const nn::ModelConfig& config() const override { return net_.config(); }
  const nn::Vocabulary& vocab() const override { return net_.vocab(); }
  nn::ParamStore& params() override { return net_.params(); }
  const nn::ParamStore& params() const override { return net_.params(); }

  std::optional<std::vector<int>> target(const DialogueAct& act) const override;
  nn::Var token_log_probs(nn::Tape& tape, const EncodedState& state, std::span<const int> action) override;
  double score(const EncodedState& state, std::span<const int> action) const override;
  nn::ActionSample sample(const EncodedState& state, Rng& rng, DecodeMode mode) const override;
  ParseReport interpret(std::span<const int> action) const override;
  std::vector<std::string> surface(std::span<const int> action) const override;
  nlohmann::json header() const override;

  nn::ActorNet& net() { return net_; }
  const nn::ActorNet& net() const { return net_; }

 private:
  Schema schema_;
  nn::ActorNet net_;
};

struct PolicyDecision {
  DialogueAct act;
  std::vector<std::string> tokens;
  std::vector<int> action;  // model action encoding
  double log_prob = 0.0;
  bool truncated = false;
  ParseReport parse;
  DialogueStateText state;
  EncodedState encoded;
};

// build_state_text -> encode -> sample -> interpret -> populate_values.
PolicyDecision act(const ActorModel& actor, const Database& db, const DialogueAct& user_act,
                   const DialogueAct& last_system_act, const BeliefState& belief,
                   const DbResultSummary& db_counts, Rng& rng, DecodeMode mode);
PolicyDecision act(const ActorModel& actor, const Database& db, const Observation& obs, Rng& rng,
                   DecodeMode mode);

// log pi(a|s) of a surface token sequence. Tokens after the first end token
// are ignored; the sequence must contain an end token unless it fills the
// decode length.
double score(const ActorModel& actor, const DialogueStateText& state, std::span<const std::string> act_tokens);

}  // namespace dialogen::policy
