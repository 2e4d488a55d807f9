#include "dialogen/eval/candidate.hpp"

#include <algorithm>

#include "dialogen/core/error.hpp"
#include "dialogen/core/linearize.hpp"

namespace dialogen::eval {

CandidateSet::CandidateSet(std::vector<Template> templates) : templates_(std::move(templates)) {
  if (templates_.empty()) throw ValidationError("candidate set is empty");
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (!index_.emplace(templates_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate candidate template");
    }
  }
}

int CandidateSet::index_of(const Template& t) const {
  auto it = index_.find(t);
  return it == index_.end() ? -1 : it->second;
}

CandidateSet extract_candidates(std::span<const DialogueAct> acts, const Schema& schema, int cutoff) {
  if (cutoff < 1) throw ValidationError("candidate cutoff must be at least 1");
  std::map<Template, int> freq;
  for (const auto& a : acts) {
    auto t = a.triplets();
    for (const auto& x : t) validate_triplet(schema, x);
    ++freq[std::move(t)];
  }
  std::vector<std::pair<Template, int>> kept;
  for (auto& [t, n] : freq) {
    if (n >= cutoff) kept.emplace_back(t, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Template> out;
  out.reserve(kept.size());
  for (auto& [t, n] : kept) out.push_back(std::move(t));
  return CandidateSet(std::move(out));
}

CandidateActor::CandidateActor(Schema schema, CandidateSet candidates, nn::ModelConfig config, std::uint64_t seed)
    : schema_(std::move(schema)),
      candidates_(std::move(candidates)),
      net_(config, nn::Vocabulary(schema_), static_cast<int>(candidates_.size()), seed) {}

int CandidateActor::check_action(std::span<const int> action) const {
  if (action.size() != 1 || action[0] < 0 || action[0] >= static_cast<int>(candidates_.size())) {
    throw UsageError("candidate action must be a single valid index");
  }
  return action[0];
}

std::optional<std::vector<int>> CandidateActor::target(const DialogueAct& act) const {
  const int i = candidates_.index_of(act.triplets());
  if (i < 0) return std::nullopt;
  return std::vector<int>{i};
}

nn::Var CandidateActor::token_log_probs(nn::Tape& tape, const policy::EncodedState& state,
                                        std::span<const int> action) {
  const int i = check_action(action);
  const int col[1] = {i};
  return tape.pick(net_.log_probs(tape, state), col);
}

double CandidateActor::score(const policy::EncodedState& state, std::span<const int> action) const {
  const int i = check_action(action);
  nn::Tape tape(false);
  return tape.value(net_.log_probs(tape, state))(0, i);
}

nn::ActionSample CandidateActor::sample(const policy::EncodedState& state, Rng& rng, policy::DecodeMode mode) const {
  nn::Tape tape(false);
  const nn::Mat& lp = tape.value(net_.log_probs(tape, state));
  int pick = 0;
  if (mode == policy::DecodeMode::kGreedy) {
    lp.row(0).maxCoeff(&pick);
  } else {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    pick = static_cast<int>(lp.cols()) - 1;
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
      u -= std::exp(lp(0, j));
      if (u <= 0.0) {
        pick = static_cast<int>(j);
        break;
      }
    }
  }
  return {{pick}, lp(0, pick), false};
}

ParseReport CandidateActor::interpret(std::span<const int> action) const {
  ParseReport r;
  r.triplets = candidates_[static_cast<std::size_t>(check_action(action))];
  r.terminated_by_end = true;
  return r;
}

std::vector<std::string> CandidateActor::surface(std::span<const int> action) const {
  auto toks = linearize_acts(schema_, candidates_[static_cast<std::size_t>(check_action(action))]);
  toks.emplace_back(kEndToken);
  return toks;
}

nlohmann::json CandidateActor::header() const {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& t : candidates_.templates()) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& a : t) row.push_back({a.domain, a.intent, a.slot});
    cands.push_back(row);
  }
  return {{"kind", kind()}, {"model", net_.config()}, {"vocabulary", net_.vocab().tokens()}, {"candidates", cands}};
}

}  // namespace dialogen::eval
