#pragma once

#include <string>

#include "dialogen/core/types.hpp"

namespace dialogen::app {

// One fixed sentence per (intent, slot) pattern, joined with spaces.
std::string render_act(const DialogueAct& act);

}  // namespace dialogen::app
