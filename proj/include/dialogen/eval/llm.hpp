#pragma once

#include <deque>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialogen/core/schema.hpp"
#include "dialogen/core/types.hpp"
#include "dialogen/eval/evaluate.hpp"

namespace dialogen::eval {

struct PromptTurn {
  DialogueAct user_act;
  DbResultSummary db;      // rendered as the total match count
  DialogueAct system_act;  // ignored for the final turn
};

// Task definition, output specification from the schema, one formatting
// example, then the dialogue history ending in an open "ASSISTANT:" line.
std::string build_llm_prompt(const Schema& schema, std::span<const PromptTurn> history);

// Pulls "(domain, intent, slot[, value])" tuples out of "[...]" lists.
// Schema-invalid and malformed tuples are dropped; duplicates kept once.
// Requests carry "?", everything else "none".
DialogueAct parse_llm_reply(std::string_view text, const Schema& schema);

class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Returns canned replies in order; once exhausted, returns "".
class ReplayTransport final : public LlmTransport {
 public:
  explicit ReplayTransport(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
  std::string complete(const std::string& prompt) override;
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::deque<std::string> replies_;
  std::vector<std::string> prompts_;
};

// System policy that prompts the transport each turn; inform values come from
// the database. History resets when an episode starts.
SystemPolicy make_llm_policy(const Schema& schema, const Database& db, std::shared_ptr<LlmTransport> transport);

}  // namespace dialogen::eval
