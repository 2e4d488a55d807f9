#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/db/database.hpp"
#include "dialogen/neural/autodiff.hpp"
#include "dialogen/policy/policy.hpp"
#include "dialogen/train/corpus.hpp"

namespace dialogen::train {

struct WarmupConfig {
  int batch_size = 32;
  double lr = 3e-4;
  int epochs = 80;
  int patience = 5;
  int train_turns = 10000;
  int valid_turns = 3000;
  double clip_norm = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const WarmupConfig& c);
void from_json(const nlohmann::json& j, WarmupConfig& c);

struct SupervisedExample {
  policy::EncodedState state;
  std::vector<int> target;
};

// Records whose target the actor cannot express are skipped.
std::vector<SupervisedExample> make_examples(const policy::ActorModel& actor, std::span<const CorpusRecord> records);

// Mean per-token negative log-likelihood over the batch (teacher forcing).
nn::Var nll_loss(nn::Tape& tape, policy::ActorModel& actor, std::span<const SupervisedExample* const> batch);
double mean_nll(const policy::ActorModel& actor, std::span<const SupervisedExample> examples);

struct WarmupResult {
  int best_epoch = -1;  // 0-based
  int epochs_run = 0;
  double best_valid_nll = 0.0;
  std::vector<double> train_nll;
  std::vector<double> valid_nll;
};

// Minimizes NLL with early stopping on validation NLL; leaves the actor at the
// best validation epoch. Throws DivergenceError on a non-finite loss.
WarmupResult warmup(policy::ActorModel& actor, std::span<const CorpusRecord> train,
                    std::span<const CorpusRecord> valid, const WarmupConfig& config, std::uint64_t seed);

// Fraction of records where the greedy action's triplets equal the target's.
double exact_match_accuracy(const policy::ActorModel& actor, const Database& db,
                            std::span<const CorpusRecord> records);

}  // namespace dialogen::train
