#pragma once

#include <vector>

#include "dialogen/eval/llm.hpp"

namespace dialogen::testing {

inline constexpr const char* kPromptGolden = "llm_prompt_toy.txt";
inline constexpr const char* kTable1Output =
    "ASSISTANT: [(restaurant, request, day), (restaurant, request, time), (restaurant, request, people)]";

// Two-turn restaurant history: the user constrains area and food, the system
// asks for the price, the user answers and asks for the phone number.
inline std::vector<eval::PromptTurn> pinned_prompt_history() {
  return {
      {DialogueAct{{{"restaurant", "inform", "area", "centre"}, {"restaurant", "inform", "food", "thai"}}},
       DbResultSummary{{{"restaurant", 1}}},
       DialogueAct{{{"restaurant", "request", "price", "?"}}}},
      {DialogueAct{{{"restaurant", "inform", "price", "expensive"}, {"restaurant", "request", "phone", "?"}}},
       DbResultSummary{{{"restaurant", 1}}},
       DialogueAct{}},
  };
}

}  // namespace dialogen::testing
