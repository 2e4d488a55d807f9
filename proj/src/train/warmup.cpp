#include "dialogen/train/warmup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dialogen/core/error.hpp"
#include "dialogen/core/linearize.hpp"
#include "dialogen/neural/optimizer.hpp"

namespace dialogen::train {

void WarmupConfig::validate() const {
  if (batch_size <= 0 || epochs <= 0 || patience <= 0 || train_turns <= 0 || valid_turns <= 0) {
    throw ValidationError("warm-up sizes must be positive");
  }
  if (!(lr > 0.0)) throw ValidationError("warm-up lr must be positive");
  if (patience > epochs) throw ValidationError("patience must not exceed epochs");
}

void to_json(nlohmann::json& j, const WarmupConfig& c) {
  j = {{"batch_size", c.batch_size},   {"lr", c.lr},
       {"epochs", c.epochs},           {"patience", c.patience},
       {"train_turns", c.train_turns}, {"valid_turns", c.valid_turns},
       {"clip_norm", c.clip_norm}};
}

void from_json(const nlohmann::json& j, WarmupConfig& c) {
  if (!j.is_object()) throw ValidationError("warmup config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") c.lr = value.get<double>();
    else if (key == "clip_norm") c.clip_norm = value.get<double>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "patience") c.patience = value.get<int>();
    else if (key == "train_turns") c.train_turns = value.get<int>();
    else if (key == "valid_turns") c.valid_turns = value.get<int>();
    else throw ValidationError("unknown warmup key '" + key + "'");
  }
  c.validate();
}

std::vector<SupervisedExample> make_examples(const policy::ActorModel& actor, std::span<const CorpusRecord> records) {
  std::vector<SupervisedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto target = actor.target(r.target_act);
    if (!target) continue;
    auto text = build_state_text(actor.schema(), r.user_act, r.system_act_prev, r.belief, r.db);
    out.push_back({actor.encode(text), std::move(*target)});
  }
  return out;
}

nn::Var nll_loss(nn::Tape& tape, policy::ActorModel& actor, std::span<const SupervisedExample* const> batch) {
  if (batch.empty()) throw UsageError("empty batch");
  std::vector<nn::Var> parts;
  parts.reserve(batch.size());
  std::size_t tokens = 0;
  for (const auto* ex : batch) {
    parts.push_back(tape.sum(actor.token_log_probs(tape, ex->state, ex->target)));
    tokens += ex->target.size();
  }
  return tape.scale(tape.sum(tape.concat_rows(parts)), -1.0 / static_cast<double>(tokens));
}

double mean_nll(const policy::ActorModel& actor, std::span<const SupervisedExample> examples) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    total -= actor.score(ex.state, ex.target);
    tokens += ex.target.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

WarmupResult warmup(policy::ActorModel& actor, std::span<const CorpusRecord> train,
                    std::span<const CorpusRecord> valid, const WarmupConfig& config, std::uint64_t seed) {
  config.validate();
  const auto train_ex = make_examples(actor, train);
  const auto valid_ex = make_examples(actor, valid);
  if (train_ex.empty()) throw UsageError("warm-up corpus is empty");
  if (valid_ex.empty()) throw UsageError("validation corpus is empty");

  nn::ParamStore& params = actor.params();
  nn::Adam opt(params, {.lr = config.lr, .clip_norm = config.clip_norm});
  Rng rng(seed);
  std::vector<std::size_t> order(train_ex.size());
  std::iota(order.begin(), order.end(), 0);

  WarmupResult result;
  nn::ParamStore best = params;
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const SupervisedExample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_ex[order[i]]);
      params.zero_grad();
      nn::Tape tape;
      nn::Var loss = nll_loss(tape, actor, batch);
      const double l = tape.scalar(loss);
      if (!std::isfinite(l)) throw DivergenceError("warm-up loss is non-finite at epoch " + std::to_string(epoch));
      tape.backward(loss);
      opt.step();
      train_total += l;
      ++batches;
    }
    const double v = mean_nll(actor, valid_ex);
    if (!std::isfinite(v)) throw DivergenceError("validation loss is non-finite at epoch " + std::to_string(epoch));
    result.train_nll.push_back(train_total / batches);
    result.valid_nll.push_back(v);
    result.epochs_run = epoch + 1;
    if (result.best_epoch < 0 || v < result.best_valid_nll) {
      result.best_epoch = epoch;
      result.best_valid_nll = v;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = best[i].value;
  params.zero_grad();
  return result;
}

double exact_match_accuracy(const policy::ActorModel& actor, const Database& db,
                            std::span<const CorpusRecord> records) {
  if (records.empty()) return 0.0;
  int hits = 0;
  Rng rng(0);
  for (const auto& r : records) {
    auto d = policy::act(actor, db, r.user_act, r.system_act_prev, r.belief, r.db, rng, policy::DecodeMode::kGreedy);
    hits += d.parse.triplets == r.target_act.triplets() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace dialogen::train
