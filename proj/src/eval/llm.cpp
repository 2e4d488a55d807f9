#include "dialogen/eval/llm.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "dialogen/actgrammar/interpreter.hpp"

namespace dialogen::eval {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string render_user(const DialogueAct& act, const DbResultSummary& db) {
  std::string out = "USER: [";
  for (std::size_t i = 0; i < act.quads.size(); ++i) {
    const auto& q = act.quads[i];
    if (i) out += ", ";
    out += "(" + q.domain + ", " + q.intent + ", " + q.slot + ", " + q.value + ")";
  }
  int matches = 0;
  for (const auto& [d, n] : db.counts) matches += n;
  out += "] " + std::to_string(matches) + (matches == 1 ? " match." : " matches.");
  return out;
}

std::string render_system(const DialogueAct& act) {
  std::string out = "ASSISTANT: [";
  for (std::size_t i = 0; i < act.quads.size(); ++i) {
    const auto& q = act.quads[i];
    if (i) out += ", ";
    out += "(" + q.domain + ", " + q.intent + ", " + q.slot + ")";
  }
  return out + "]";
}

std::string trim_lower(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_fields(std::string_view body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    out.push_back(trim_lower(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string build_llm_prompt(const Schema& schema, std::span<const PromptTurn> history) {
  std::set<std::string> slots;
  for (const auto& d : schema.domains()) {
    for (const auto& [slot, values] : schema.domain(d).slots) slots.insert(slot);
  }
  std::ostringstream out;
  out << "You are a dialogue agent to assist me with my queries and provide me with relevant information "
         "from a database. My questions are formatted as tuples of (domain, intent, slot, slot value) "
         "accompanied by the number of matching results that satisfy my constraint from the database, "
         "e.g., \"4 matches\".\n";
  out << "Your responses should be formatted as one or several tuples of (domain, intent, slot) to provide "
         "me with the necessary information.\n";
  out << "The domain is selected from " << join(schema.domains()) << ".\n";
  out << "The intent is selected from " << join(schema.intents()) << ".\n";
  out << "The slot includes " << join({slots.begin(), slots.end()}) << ".\n";
  out << "Example 1:\n";
  out << "USER: [(train, inform, depart, london kings cross)] 3 matches.\n";
  out << "ASSISTANT: [(train, inform, id)]\n";
  out << "Example 2:\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << render_user(history[i].user_act, history[i].db) << '\n';
    if (i + 1 < history.size()) out << render_system(history[i].system_act) << '\n';
  }
  out << "ASSISTANT:";
  return out.str();
}

DialogueAct parse_llm_reply(std::string_view text, const Schema& schema) {
  DialogueAct act;
  std::set<AtomicAct> seen;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('[', pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find(']', open + 1);
    if (close == std::string_view::npos) break;
    const auto list = text.substr(open + 1, close - open - 1);
    pos = close + 1;
    std::size_t p = 0;
    while (true) {
      const auto lp = list.find('(', p);
      if (lp == std::string_view::npos) break;
      const auto rp = list.find(')', lp + 1);
      if (rp == std::string_view::npos) break;
      const auto inner = list.substr(lp + 1, rp - lp - 1);
      p = rp + 1;
      if (inner.find('(') != std::string_view::npos) continue;  // unbalanced
      const auto f = split_fields(inner);
      if (f.size() != 3 && f.size() != 4) continue;
      AtomicAct a{f[0], f[1], f[2]};
      if (!schema.has_domain(a.domain) || !schema.has_intent(a.intent) || !schema.has_slot(a.domain, a.slot)) continue;
      if (!seen.insert(a).second) continue;
      act.quads.push_back({a.domain, a.intent, a.slot, a.intent == "request" ? "?" : "none"});
    }
  }
  return act;
}

std::string ReplayTransport::complete(const std::string& prompt) {
  prompts_.push_back(prompt);
  if (replies_.empty()) return "";
  std::string r = std::move(replies_.front());
  replies_.pop_front();
  return r;
}

SystemPolicy make_llm_policy(const Schema& schema, const Database& db, std::shared_ptr<LlmTransport> transport) {
  auto history = std::make_shared<std::vector<PromptTurn>>();
  return [schema, &db, transport, history](const Observation& obs, const SimulatorState& sim, Rng&) {
    if (sim.system_turns == 0) history->clear();
    history->push_back({obs.user_act, obs.db, {}});
    const auto prompt = build_llm_prompt(schema, *history);
    const DialogueAct parsed = parse_llm_reply(transport->complete(prompt), schema);
    const auto triplets = parsed.triplets();
    DialogueAct reply = populate_values(triplets, db, obs.belief);
    history->back().system_act = reply;
    return reply;
  };
}

}  // namespace dialogen::eval
