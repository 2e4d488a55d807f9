#include "dialogen/app/nlg.hpp"

#include "dialogen/core/schema.hpp"

namespace dialogen::app {

namespace {

std::string render_quad(const ActQuad& q) {
  if (q.intent == "inform") {
    if (q.slot == kNoneValue) return "I have information about the " + q.domain + ".";
    if (q.value == kNoneValue) return "I could not find the " + q.slot + " of a matching " + q.domain + ".";
    return "The " + q.slot + " of the " + q.domain + " is " + q.value + ".";
  }
  if (q.intent == "request") return "Which " + q.slot + " would you like for the " + q.domain + "?";
  if (q.intent == "bye") return "Goodbye.";
  return "(" + q.intent + " " + q.domain + " " + q.slot + ")";
}

}  // namespace

std::string render_act(const DialogueAct& act) {
  if (act.empty()) return "Sorry, I have nothing to add.";
  std::string out;
  for (const auto& q : act.quads) {
    if (!out.empty()) out += ' ';
    out += render_quad(q);
  }
  return out;
}

}  // namespace dialogen::app
