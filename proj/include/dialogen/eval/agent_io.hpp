#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "dialogen/neural/model.hpp"
#include "dialogen/policy/policy.hpp"

namespace dialogen::eval {

struct Agent {
  std::unique_ptr<policy::ActorModel> actor;
  std::optional<nn::CriticNet> critic;
  nlohmann::json meta;
};

// Actor (word-level or candidate) plus optional critic in one checkpoint file.
void save_agent(const std::filesystem::path& path, const policy::ActorModel& actor, const nn::CriticNet* critic,
                const nlohmann::json& meta = nlohmann::json::object());
// The schema must produce the vocabulary stored in the checkpoint.
Agent load_agent(const std::filesystem::path& path, const Schema& schema);

}  // namespace dialogen::eval
