#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "dialogen/neural/model.hpp"
#include "dialogen/policy/policy.hpp"

namespace dialogen::eval {

using Template = std::vector<AtomicAct>;

// Triplet combinations seen in a corpus, most frequent first (ties broken
// lexicographically).
class CandidateSet {
 public:
  CandidateSet() = default;
  explicit CandidateSet(std::vector<Template> templates);

  std::size_t size() const { return templates_.size(); }
  const std::vector<Template>& templates() const { return templates_; }
  const Template& operator[](std::size_t i) const { return templates_.at(i); }
  bool contains(const Template& t) const { return index_.contains(t); }
  // -1 when absent.
  int index_of(const Template& t) const;

 private:
  std::vector<Template> templates_;
  std::map<Template, int> index_;
};

// Keeps combinations occurring at least `cutoff` times. Throws when nothing
// survives the cutoff.
CandidateSet extract_candidates(std::span<const DialogueAct> acts, const Schema& schema, int cutoff = 2);

// Fixed-candidate baseline: one classification decision per turn; the action
// encoding is the single candidate index.
class CandidateActor final : public policy::ActorModel {
 public:
  CandidateActor(Schema schema, CandidateSet candidates, nn::ModelConfig config, std::uint64_t seed);

  std::string kind() const override { return "candidate"; }
  std::unique_ptr<ActorModel> clone() const override { return std::make_unique<CandidateActor>(*this); }

  const Schema& schema() const override { return schema_; }
  const nn::ModelConfig& config() const override { return net_.config(); }
  const nn::Vocabulary& vocab() const override { return net_.vocab(); }
  nn::ParamStore& params() override { return net_.params(); }
  const nn::ParamStore& params() const override { return net_.params(); }

  std::optional<std::vector<int>> target(const DialogueAct& act) const override;
  nn::Var token_log_probs(nn::Tape& tape, const policy::EncodedState& state, std::span<const int> action) override;
  double score(const policy::EncodedState& state, std::span<const int> action) const override;
  nn::ActionSample sample(const policy::EncodedState& state, Rng& rng, policy::DecodeMode mode) const override;
  ParseReport interpret(std::span<const int> action) const override;
  std::vector<std::string> surface(std::span<const int> action) const override;
  nlohmann::json header() const override;

  const CandidateSet& candidates() const { return candidates_; }

 private:
  int check_action(std::span<const int> action) const;

  Schema schema_;
  CandidateSet candidates_;
  nn::CandidateNet net_;
};

}  // namespace dialogen::eval
