#include "dialogen/actgrammar/interpreter.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

#include "dialogen/core/error.hpp"

namespace dialogen {

namespace {

enum class Expect { kDomain, kIntent, kSlot };

struct Partial {
  std::string domain;
  std::string intent;
  std::size_t domain_pos = 0;
  std::size_t intent_pos = 0;
};

}  // namespace

ParseReport parse_act_text(std::span<const std::string> tokens, const Schema& schema) {
  ParseReport report;
  Expect expect = Expect::kDomain;
  Partial cur;

  auto discard = [&](std::size_t pos, const std::string& tok, std::string reason) {
    report.discarded.push_back({pos, tok, std::move(reason)});
  };
  auto abort_partial = [&](const char* reason) {
    if (expect == Expect::kDomain) return;
    discard(cur.domain_pos, cur.domain, reason);
    if (expect == Expect::kSlot) discard(cur.intent_pos, cur.intent, reason);
    expect = Expect::kDomain;
  };

  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const std::string& tok = tokens[pos];
    if (tok == kEndToken) {
      report.terminated_by_end = true;
      break;
    }
    const bool is_domain = schema.has_domain(tok);
    switch (expect) {
      case Expect::kDomain:
        if (is_domain) {
          cur = {tok, {}, pos, 0};
          expect = Expect::kIntent;
        } else {
          discard(pos, tok, "not a domain");
        }
        break;
      case Expect::kIntent:
        if (schema.has_intent(tok)) {
          cur.intent = tok;
          cur.intent_pos = pos;
          expect = Expect::kSlot;
        } else if (is_domain) {
          abort_partial("incomplete triplet restarted by a domain");
          cur = {tok, {}, pos, 0};
          expect = Expect::kIntent;
        } else {
          discard(pos, tok, "not an intent");
        }
        break;
      case Expect::kSlot:
        if (schema.has_slot(cur.domain, tok)) {
          AtomicAct act{cur.domain, cur.intent, tok};
          if (std::find(report.triplets.begin(), report.triplets.end(), act) != report.triplets.end()) {
            discard(cur.domain_pos, cur.domain, "duplicate triplet");
            discard(cur.intent_pos, cur.intent, "duplicate triplet");
            discard(pos, tok, "duplicate triplet");
          } else {
            report.triplets.push_back(std::move(act));
          }
          expect = Expect::kDomain;
        } else if (is_domain) {
          abort_partial("incomplete triplet restarted by a domain");
          cur = {tok, {}, pos, 0};
          expect = Expect::kIntent;
        } else {
          discard(pos, tok, "not a slot of domain '" + cur.domain + "'");
        }
        break;
    }
  }
  abort_partial("incomplete triplet at end of text");
  std::sort(report.discarded.begin(), report.discarded.end(),
            [](const Discard& a, const Discard& b) { return a.position < b.position; });
  return report;
}

DialogueAct populate_values(std::span<const AtomicAct> triplets, const Database& db,
                            const BeliefState& belief) {
  DialogueAct out;
  std::map<std::string, std::optional<EntityRefs>> matches;
  for (const auto& t : triplets) {
    std::string value(kNoneValue);
    if (t.intent == kRequestIntent) {
      value = kRequestValue;
    } else if (t.intent == kInformIntent) {
      auto& m = matches[t.domain];
      if (!m) m = db.query(t.domain, belief.constraints(t.domain));
      if (!m->empty()) {
        if (const std::string* v = m->front().get().get(t.slot)) value = *v;
      }
    }
    out.quads.push_back({t.domain, t.intent, t.slot, std::move(value)});
  }
  return out;
}

TokenSeq linearize_target(const Schema& schema, const DialogueAct& act) {
  validate_act(schema, act);
  TokenSeq out = linearize_acts(schema, act);
  out.emplace_back(kEndToken);
  return out;
}

BeliefState parse_belief_text(std::span<const std::string> tokens, const Schema& schema) {
  BeliefState belief;
  auto starts_pair = [&](std::size_t i) {
    return i + 1 < tokens.size() && schema.has_domain(tokens[i]) && schema.has_slot(tokens[i], tokens[i + 1]);
  };
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!starts_pair(i)) {
      ++i;
      continue;
    }
    const std::string& domain = tokens[i];
    const std::string& slot = tokens[i + 1];
    std::vector<std::string> value;
    std::size_t j = i + 2;
    // The first value token is always consumed so that values equal to a
    // domain name still parse.
    if (j < tokens.size()) value.push_back(tokens[j++]);
    while (j < tokens.size() && !starts_pair(j)) value.push_back(tokens[j++]);
    belief.triplets.push_back({domain, slot, join_tokens(value)});
    i = j;
  }
  return belief;
}

DbResultSummary parse_db_text(std::span<const std::string> tokens, const Schema& schema) {
  DbResultSummary out;
  for (std::size_t i = 0; i + 1 < tokens.size(); i += 2) {
    if (!schema.has_domain(tokens[i])) throw ValidationError("db text: '" + tokens[i] + "' is not a domain");
    const std::string& q = tokens[i + 1];
    int n = 0;
    if (q == count_token(kCountBucket)) {
      n = kCountBucket;
    } else {
      auto [ptr, ec] = std::from_chars(q.data(), q.data() + q.size(), n);
      if (ec != std::errc() || ptr != q.data() + q.size()) {
        throw ValidationError("db text: '" + q + "' is not a count");
      }
    }
    out.counts.emplace_back(tokens[i], n);
  }
  if (tokens.size() % 2 != 0) throw ValidationError("db text: dangling domain token");
  return out;
}

}  // namespace dialogen
