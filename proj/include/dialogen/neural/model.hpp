#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/core/types.hpp"
#include "dialogen/neural/autodiff.hpp"
#include "dialogen/neural/vocabulary.hpp"

namespace dialogen::nn {

struct ModelConfig {
  int hidden_size = 256;
  int layers = 1;
  int heads = 1;
  int ff_size = 0;  // 0 means 4 * hidden_size
  int max_decode_len = 24;
  int max_text_len = 64;

  int ff() const { return ff_size > 0 ? ff_size : 4 * hidden_size; }
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Token ids of the four state texts, each prefixed with the classifier token
// and capped at max_text_len (excess tokens are dropped from the end).
struct EncodedState {
  std::array<std::vector<int>, 4> texts;

  bool operator==(const EncodedState&) const = default;
};

EncodedState encode_state(const Vocabulary& vocab, const DialogueStateText& text, int max_text_len);

// Parameter indices of one attention block inside a ParamStore.
struct AttentionIds {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FeedForwardIds {
  std::size_t w1, b1, w2, b2;
};
struct NormIds {
  std::size_t gain, bias;
};
struct EncoderLayerIds {
  AttentionIds attn;
  NormIds norm1;
  FeedForwardIds ff;
  NormIds norm2;
};
struct DecoderLayerIds {
  AttentionIds self_attn;
  NormIds norm1;
  AttentionIds cross_attn;
  NormIds norm2;
  FeedForwardIds ff;
  NormIds norm3;
};

// Encodes each state text separately with a transformer encoder; the
// classifier-position output plus a per-text context embedding forms one row
// of the 4 x d state matrix.
struct StateEncoderIds {
  std::size_t tok_emb, pos_emb, ctx_emb;
  std::vector<EncoderLayerIds> layers;
};

struct ActionSample {
  std::vector<int> tokens;  // generated tokens, including the end token when emitted
  double log_prob = 0.0;
  bool truncated = false;
};

enum class DecodeMode { kGreedy, kSample };

// Word-level actor: state-text encoder, then a transformer encoder over the
// four state rows and an autoregressive decoder over action tokens.
class ActorNet {
 public:
  ActorNet() = default;
  ActorNet(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // 4 x d state matrix.
  Var encode(Tape& tape, const EncodedState& state);
  Var encode(Tape& tape, const EncodedState& state) const;
  // Action-encoder output over the state rows.
  Var memory(Tape& tape, Var state);
  Var memory(Tape& tape, Var state) const;
  // Per-position log-probabilities (L x |V|) for decoder inputs
  // [start] w1 .. w_{L-1}.
  Var decoder_log_probs(Tape& tape, Var memory, std::span<const int> inputs);
  Var decoder_log_probs(Tape& tape, Var memory, std::span<const int> inputs) const;

  // Per-token log P(w_i | w_<i, s) as an L x 1 column for the given targets.
  Var token_log_probs(Tape& tape, const EncodedState& state, std::span<const int> targets);
  Var token_log_probs(Tape& tape, const EncodedState& state, std::span<const int> targets) const;

  // Sum of token log-probabilities, evaluated without recording.
  double score(const EncodedState& state, std::span<const int> targets) const;

  ActionSample sample(const EncodedState& state, std::mt19937_64& rng, DecodeMode mode) const;

  // Test hook: replaces the output logits by zeros (uniform next-token distribution).
  void set_zero_logits(bool on) { zero_logits_ = on; }

 private:
  template <typename Store>
  Var encode_impl(Tape& tape, Store& store, const EncodedState& state) const;
  template <typename Store>
  Var memory_impl(Tape& tape, Store& store, Var state) const;
  template <typename Store>
  Var decoder_impl(Tape& tape, Store& store, Var memory, std::span<const int> inputs) const;
  template <typename Store>
  Var token_log_probs_impl(Tape& tape, Store& store, const EncodedState& state,
                           std::span<const int> targets) const;

  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
  StateEncoderIds state_enc_{};
  std::vector<EncoderLayerIds> action_enc_;
  std::size_t dec_pos_ = 0;
  std::vector<DecoderLayerIds> decoder_;
  std::size_t out_w_ = 0;
  std::size_t out_b_ = 0;
  bool zero_logits_ = false;
};

// State-value critic: its own state-text encoder and an encoder trunk of the
// same shape as the actor's action encoder; rows are mean-pooled and a linear
// head yields V(s). The head starts at zero.
class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Var value(Tape& tape, const EncodedState& state);
  Var value(Tape& tape, const EncodedState& state) const;
  double value(const EncodedState& state) const;

 private:
  template <typename Store>
  Var value_impl(Tape& tape, Store& store, const EncodedState& state) const;

  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
  StateEncoderIds state_enc_{};
  std::vector<EncoderLayerIds> trunk_;
  std::size_t head_w_ = 0;
  std::size_t head_b_ = 0;
};

// Classifier over a fixed list of actions: state-text encoder, encoder trunk,
// mean-pool and a linear head with one logit per class.
class CandidateNet {
 public:
  CandidateNet() = default;
  CandidateNet(ModelConfig config, Vocabulary vocab, int n_classes, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  int classes() const { return n_classes_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // 1 x classes log-probabilities.
  Var log_probs(Tape& tape, const EncodedState& state);
  Var log_probs(Tape& tape, const EncodedState& state) const;

 private:
  template <typename Store>
  Var log_probs_impl(Tape& tape, Store& store, const EncodedState& state) const;

  ModelConfig config_;
  Vocabulary vocab_;
  int n_classes_ = 0;
  ParamStore params_;
  StateEncoderIds state_enc_{};
  std::vector<EncoderLayerIds> trunk_;
  std::size_t head_w_ = 0;
  std::size_t head_b_ = 0;
};

}  // namespace dialogen::nn
