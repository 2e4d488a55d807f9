#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dialogen/neural/model.hpp"
#include "dialogen/simulator/simulator.hpp"
#include "dialogen/train/ppo.hpp"
#include "dialogen/train/warmup.hpp"

namespace dialogen::app {

struct DataConfig {
  std::uint64_t seed = 0;
  int test_turns = 500;
};

struct EvalConfig {
  int episodes = 200;
  std::uint64_t seed = 1000;
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int turn_limit = 20;
};

struct RunConfig {
  std::filesystem::path schema = "data/toy_schema.json";
  std::filesystem::path database = "data/toy_db.json";
  std::string actor = "word";  // word | candidate
  int candidate_cutoff = 2;
  nn::ModelConfig model;
  RewardConfig reward;
  OracleOptions oracle;
  DataConfig data;
  train::WarmupConfig warmup;
  train::PpoConfig ppo;
  EvalConfig eval;
  ServeConfig serve;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Defaults, overlaid by the file (if any), overlaid by environment variables
// named DIALOGEN_<SECTION>_<KEY> (upper case, e.g. DIALOGEN_PPO_ACTOR_LR).
// Relative schema/database paths resolve against the config file directory.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env());

}  // namespace dialogen::app
