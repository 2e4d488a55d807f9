#include "dialogen/neural/model.hpp"

#include <cmath>

#include "dialogen/core/error.hpp"

namespace dialogen::nn {

void ModelConfig::validate() const {
  if (hidden_size <= 0) throw ValidationError("hidden_size must be positive");
  if (layers <= 0) throw ValidationError("layers must be positive");
  if (heads <= 0 || hidden_size % heads != 0) throw ValidationError("heads must divide hidden_size");
  if (ff_size < 0) throw ValidationError("ff_size must be non-negative");
  if (max_decode_len <= 0) throw ValidationError("max_decode_len must be positive");
  if (max_text_len < 2) throw ValidationError("max_text_len must be at least 2");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"hidden_size", c.hidden_size}, {"layers", c.layers},
       {"heads", c.heads},             {"ff_size", c.ff_size},
       {"max_decode_len", c.max_decode_len}, {"max_text_len", c.max_text_len}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) throw ValidationError("model config must be an object");
  for (const auto& [key, value] : j.items()) {
    int* field = nullptr;
    if (key == "hidden_size") field = &c.hidden_size;
    else if (key == "layers") field = &c.layers;
    else if (key == "heads") field = &c.heads;
    else if (key == "ff_size") field = &c.ff_size;
    else if (key == "max_decode_len") field = &c.max_decode_len;
    else if (key == "max_text_len") field = &c.max_text_len;
    else throw ValidationError("unknown model config key '" + key + "'");
    if (!value.is_number_integer()) throw ValidationError("model config '" + key + "' must be an integer");
    *field = value.get<int>();
  }
  c.validate();
}

EncodedState encode_state(const Vocabulary& vocab, const DialogueStateText& text, int max_text_len) {
  EncodedState out;
  const std::array<const std::vector<std::string>*, 4> parts{&text.user_act, &text.system_act, &text.belief, &text.db};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto& ids = out.texts[i];
    ids.push_back(Vocabulary::kCls);
    for (const auto& tok : *parts[i]) {
      if (static_cast<int>(ids.size()) >= max_text_len) break;
      ids.push_back(vocab.id(tok));
    }
  }
  return out;
}

namespace {

class Builder {
 public:
  Builder(ParamStore& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  std::size_t uniform(const std::string& name, int rows, int cols, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
    return add(name, std::move(m));
  }
  std::size_t weight(const std::string& name, int rows, int cols) {
    return uniform(name, rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
  }
  std::size_t constant(const std::string& name, int rows, int cols, double v) {
    return add(name, Mat::Constant(rows, cols, v));
  }

  AttentionIds attention(const std::string& p, int d) {
    AttentionIds a{};
    a.wq = weight(p + ".wq", d, d);
    a.bq = constant(p + ".bq", 1, d, 0.0);
    a.wk = weight(p + ".wk", d, d);
    a.bk = constant(p + ".bk", 1, d, 0.0);
    a.wv = weight(p + ".wv", d, d);
    a.bv = constant(p + ".bv", 1, d, 0.0);
    a.wo = weight(p + ".wo", d, d);
    a.bo = constant(p + ".bo", 1, d, 0.0);
    return a;
  }
  FeedForwardIds feed_forward(const std::string& p, int d, int ff) {
    FeedForwardIds f{};
    f.w1 = weight(p + ".w1", d, ff);
    f.b1 = constant(p + ".b1", 1, ff, 0.0);
    f.w2 = weight(p + ".w2", ff, d);
    f.b2 = constant(p + ".b2", 1, d, 0.0);
    return f;
  }
  NormIds norm(const std::string& p, int d) {
    return {constant(p + ".gain", 1, d, 1.0), constant(p + ".bias", 1, d, 0.0)};
  }
  EncoderLayerIds encoder_layer(const std::string& p, const ModelConfig& c) {
    EncoderLayerIds l{};
    l.attn = attention(p + ".attn", c.hidden_size);
    l.norm1 = norm(p + ".norm1", c.hidden_size);
    l.ff = feed_forward(p + ".ff", c.hidden_size, c.ff());
    l.norm2 = norm(p + ".norm2", c.hidden_size);
    return l;
  }
  DecoderLayerIds decoder_layer(const std::string& p, const ModelConfig& c) {
    DecoderLayerIds l{};
    l.self_attn = attention(p + ".self_attn", c.hidden_size);
    l.norm1 = norm(p + ".norm1", c.hidden_size);
    l.cross_attn = attention(p + ".cross_attn", c.hidden_size);
    l.norm2 = norm(p + ".norm2", c.hidden_size);
    l.ff = feed_forward(p + ".ff", c.hidden_size, c.ff());
    l.norm3 = norm(p + ".norm3", c.hidden_size);
    return l;
  }
  StateEncoderIds state_encoder(const std::string& p, const ModelConfig& c, int vocab_size) {
    StateEncoderIds s{};
    const double b = 1.0 / std::sqrt(static_cast<double>(c.hidden_size));
    s.tok_emb = uniform(p + ".tok_emb", vocab_size, c.hidden_size, b);
    s.pos_emb = uniform(p + ".pos_emb", c.max_text_len, c.hidden_size, b);
    s.ctx_emb = uniform(p + ".ctx_emb", 4, c.hidden_size, b);
    for (int i = 0; i < c.layers; ++i) s.layers.push_back(encoder_layer(p + ".layer" + std::to_string(i), c));
    return s;
  }

 private:
  std::size_t add(const std::string& name, Mat m) {
    store_.add(name, std::move(m));
    return store_.size() - 1;
  }

  ParamStore& store_;
  std::mt19937_64 rng_;
};

template <typename Store>
Var P(Tape& t, Store& s, std::size_t i) {
  return t.param(s[i]);
}

template <typename Store>
Var linear(Tape& t, Store& s, Var x, std::size_t w, std::size_t b) {
  return t.add_row(t.matmul(x, P(t, s, w)), P(t, s, b));
}

template <typename Store>
Var attend(Tape& t, Store& s, const AttentionIds& a, Var x, Var mem, int heads, bool causal) {
  Var q = linear(t, s, x, a.wq, a.bq);
  Var k = linear(t, s, mem, a.wk, a.bk);
  Var v = linear(t, s, mem, a.wv, a.bv);
  return linear(t, s, t.attention(q, k, v, heads, causal), a.wo, a.bo);
}

template <typename Store>
Var norm(Tape& t, Store& s, const NormIds& n, Var x) {
  return t.layer_norm(x, P(t, s, n.gain), P(t, s, n.bias));
}

template <typename Store>
Var feed_forward(Tape& t, Store& s, const FeedForwardIds& f, Var x) {
  return linear(t, s, t.gelu(linear(t, s, x, f.w1, f.b1)), f.w2, f.b2);
}

template <typename Store>
Var encoder_layer(Tape& t, Store& s, const EncoderLayerIds& l, Var x, int heads) {
  x = norm(t, s, l.norm1, t.add(x, attend(t, s, l.attn, x, x, heads, false)));
  return norm(t, s, l.norm2, t.add(x, feed_forward(t, s, l.ff, x)));
}

template <typename Store>
Var decoder_layer(Tape& t, Store& s, const DecoderLayerIds& l, Var x, Var mem, int heads) {
  x = norm(t, s, l.norm1, t.add(x, attend(t, s, l.self_attn, x, x, heads, true)));
  x = norm(t, s, l.norm2, t.add(x, attend(t, s, l.cross_attn, x, mem, heads, false)));
  return norm(t, s, l.norm3, t.add(x, feed_forward(t, s, l.ff, x)));
}

std::vector<int> positions(std::size_t n) {
  std::vector<int> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
  return p;
}

template <typename Store>
Var encode_state_rows(Tape& t, Store& s, const StateEncoderIds& e, const ModelConfig& c,
                      const EncodedState& state) {
  std::vector<Var> rows;
  rows.reserve(4);
  for (std::size_t i = 0; i < state.texts.size(); ++i) {
    const auto& ids = state.texts[i];
    if (ids.empty() || static_cast<int>(ids.size()) > c.max_text_len) {
      throw UsageError("state text length out of range");
    }
    const auto pos = positions(ids.size());
    Var x = t.add(t.gather_rows(P(t, s, e.tok_emb), ids), t.gather_rows(P(t, s, e.pos_emb), pos));
    for (const auto& l : e.layers) x = encoder_layer(t, s, l, x, c.heads);
    const int ctx[1] = {static_cast<int>(i)};
    rows.push_back(t.add(t.row(x, 0), t.gather_rows(P(t, s, e.ctx_emb), ctx)));
  }
  return t.concat_rows(rows);
}

}  // namespace

// --- ActorNet -------------------------------------------------------------

ActorNet::ActorNet(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (vocab_.size() == 0) throw ValidationError("empty vocabulary");
  Builder b(params_, seed);
  const int d = config_.hidden_size;
  state_enc_ = b.state_encoder("actor.state", config_, vocab_.size());
  for (int i = 0; i < config_.layers; ++i) {
    action_enc_.push_back(b.encoder_layer("actor.action_enc.layer" + std::to_string(i), config_));
  }
  dec_pos_ = b.uniform("actor.dec_pos", config_.max_decode_len, d, 1.0 / std::sqrt(static_cast<double>(d)));
  for (int i = 0; i < config_.layers; ++i) {
    decoder_.push_back(b.decoder_layer("actor.decoder.layer" + std::to_string(i), config_));
  }
  out_w_ = b.weight("actor.out.w", d, vocab_.size());
  out_b_ = b.constant("actor.out.b", 1, vocab_.size(), 0.0);
}

template <typename Store>
Var ActorNet::encode_impl(Tape& tape, Store& store, const EncodedState& state) const {
  return encode_state_rows(tape, store, state_enc_, config_, state);
}

template <typename Store>
Var ActorNet::memory_impl(Tape& tape, Store& store, Var state) const {
  Var x = state;
  for (const auto& l : action_enc_) x = encoder_layer(tape, store, l, x, config_.heads);
  return x;
}

template <typename Store>
Var ActorNet::decoder_impl(Tape& tape, Store& store, Var memory, std::span<const int> inputs) const {
  if (inputs.empty() || static_cast<int>(inputs.size()) > config_.max_decode_len) {
    throw UsageError("decoder input length out of range");
  }
  if (inputs.front() != Vocabulary::kStart) throw UsageError("decoder input must begin with the start token");
  const auto pos = positions(inputs.size());
  // Decoder shares the actor's token embedding table.
  Var x = tape.add(tape.gather_rows(P(tape, store, state_enc_.tok_emb), inputs),
                   tape.gather_rows(P(tape, store, dec_pos_), pos));
  for (const auto& l : decoder_) x = decoder_layer(tape, store, l, x, memory, config_.heads);
  Var logits = linear(tape, store, x, out_w_, out_b_);
  if (zero_logits_) logits = tape.scale(logits, 0.0);
  return tape.log_softmax_rows(logits);
}

template <typename Store>
Var ActorNet::token_log_probs_impl(Tape& tape, Store& store, const EncodedState& state,
                                   std::span<const int> targets) const {
  if (targets.empty() || static_cast<int>(targets.size()) > config_.max_decode_len) {
    throw UsageError("target length out of range");
  }
  for (int id : targets) {
    if (id < 0 || id >= vocab_.size()) throw UsageError("target token id out of range");
  }
  std::vector<int> inputs;
  inputs.reserve(targets.size());
  inputs.push_back(Vocabulary::kStart);
  inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
  Var mem = memory_impl(tape, store, encode_impl(tape, store, state));
  return tape.pick(decoder_impl(tape, store, mem, inputs), targets);
}

Var ActorNet::encode(Tape& tape, const EncodedState& state) { return encode_impl(tape, params_, state); }
Var ActorNet::encode(Tape& tape, const EncodedState& state) const { return encode_impl(tape, params_, state); }
Var ActorNet::memory(Tape& tape, Var state) { return memory_impl(tape, params_, state); }
Var ActorNet::memory(Tape& tape, Var state) const { return memory_impl(tape, params_, state); }
Var ActorNet::decoder_log_probs(Tape& tape, Var memory, std::span<const int> inputs) {
  return decoder_impl(tape, params_, memory, inputs);
}
Var ActorNet::decoder_log_probs(Tape& tape, Var memory, std::span<const int> inputs) const {
  return decoder_impl(tape, params_, memory, inputs);
}
Var ActorNet::token_log_probs(Tape& tape, const EncodedState& state, std::span<const int> targets) {
  return token_log_probs_impl(tape, params_, state, targets);
}
Var ActorNet::token_log_probs(Tape& tape, const EncodedState& state, std::span<const int> targets) const {
  return token_log_probs_impl(tape, params_, state, targets);
}

double ActorNet::score(const EncodedState& state, std::span<const int> targets) const {
  Tape tape(false);
  return tape.value(token_log_probs(tape, state, targets)).sum();
}

ActionSample ActorNet::sample(const EncodedState& state, std::mt19937_64& rng, DecodeMode mode) const {
  Tape tape(false);
  Var mem = memory(tape, encode(tape, state));
  ActionSample out;
  std::vector<int> inputs{Vocabulary::kStart};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (true) {
    const Mat& lp = tape.value(decoder_log_probs(tape, mem, inputs));
    const auto last = lp.row(lp.rows() - 1);
    int tok = 0;
    if (mode == DecodeMode::kGreedy) {
      last.maxCoeff(&tok);
    } else {
      double u = unif(rng);
      tok = static_cast<int>(last.size()) - 1;
      for (Eigen::Index j = 0; j < last.size(); ++j) {
        u -= std::exp(last(j));
        if (u <= 0.0) {
          tok = static_cast<int>(j);
          break;
        }
      }
    }
    out.tokens.push_back(tok);
    out.log_prob += last(tok);
    if (tok == Vocabulary::kEnd) break;
    if (static_cast<int>(out.tokens.size()) >= config_.max_decode_len) {
      out.truncated = true;
      break;
    }
    inputs.push_back(tok);
  }
  return out;
}

// --- CriticNet ------------------------------------------------------------

CriticNet::CriticNet(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (vocab_.size() == 0) throw ValidationError("empty vocabulary");
  Builder b(params_, seed);
  state_enc_ = b.state_encoder("critic.state", config_, vocab_.size());
  for (int i = 0; i < config_.layers; ++i) {
    trunk_.push_back(b.encoder_layer("critic.trunk.layer" + std::to_string(i), config_));
  }
  head_w_ = b.constant("critic.head.w", config_.hidden_size, 1, 0.0);
  head_b_ = b.constant("critic.head.b", 1, 1, 0.0);
}

template <typename Store>
Var CriticNet::value_impl(Tape& tape, Store& store, const EncodedState& state) const {
  Var x = encode_state_rows(tape, store, state_enc_, config_, state);
  for (const auto& l : trunk_) x = encoder_layer(tape, store, l, x, config_.heads);
  return linear(tape, store, tape.mean_rows(x), head_w_, head_b_);
}

Var CriticNet::value(Tape& tape, const EncodedState& state) { return value_impl(tape, params_, state); }
Var CriticNet::value(Tape& tape, const EncodedState& state) const { return value_impl(tape, params_, state); }

double CriticNet::value(const EncodedState& state) const {
  Tape tape(false);
  return tape.scalar(value(tape, state));
}

// --- CandidateNet ---------------------------------------------------------

CandidateNet::CandidateNet(ModelConfig config, Vocabulary vocab, int n_classes, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), n_classes_(n_classes) {
  config_.validate();
  if (n_classes_ <= 0) throw ValidationError("candidate classifier needs at least one class");
  Builder b(params_, seed);
  state_enc_ = b.state_encoder("candidate.state", config_, vocab_.size());
  for (int i = 0; i < config_.layers; ++i) {
    trunk_.push_back(b.encoder_layer("candidate.trunk.layer" + std::to_string(i), config_));
  }
  head_w_ = b.weight("candidate.head.w", config_.hidden_size, n_classes_);
  head_b_ = b.constant("candidate.head.b", 1, n_classes_, 0.0);
}

template <typename Store>
Var CandidateNet::log_probs_impl(Tape& tape, Store& store, const EncodedState& state) const {
  Var x = encode_state_rows(tape, store, state_enc_, config_, state);
  for (const auto& l : trunk_) x = encoder_layer(tape, store, l, x, config_.heads);
  return tape.log_softmax_rows(linear(tape, store, tape.mean_rows(x), head_w_, head_b_));
}

Var CandidateNet::log_probs(Tape& tape, const EncodedState& state) { return log_probs_impl(tape, params_, state); }
Var CandidateNet::log_probs(Tape& tape, const EncodedState& state) const {
  return log_probs_impl(tape, params_, state);
}

}  // namespace dialogen::nn
