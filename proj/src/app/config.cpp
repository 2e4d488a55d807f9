#include "dialogen/app/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "dialogen/core/error.hpp"

namespace dialogen::app {

namespace {

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ValidationError("unknown key '" + k + "' in " + where);
  }
}

std::string env_name(const std::string& path) {
  std::string out = "DIALOGEN_";
  for (char c : path) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void apply_env(nlohmann::json& node, const std::string& path, const EnvLookup& env) {
  if (node.is_object()) {
    for (auto& [k, v] : node.items()) apply_env(v, path.empty() ? k : path + "." + k, env);
    return;
  }
  const auto value = env(env_name(path));
  if (!value) return;
  if (node.is_string()) {
    node = *value;
    return;
  }
  try {
    node = nlohmann::json::parse(*value);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("environment override " + env_name(path) + " is not a valid value");
  }
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  return {{"schema", c.schema.string()},
          {"database", c.database.string()},
          {"actor", c.actor},
          {"candidate_cutoff", c.candidate_cutoff},
          {"model", c.model},
          {"reward", c.reward},
          {"oracle", c.oracle},
          {"data", {{"seed", c.data.seed}, {"test_turns", c.data.test_turns}}},
          {"warmup", c.warmup},
          {"ppo", c.ppo},
          {"eval", {{"episodes", c.eval.episodes}, {"seed", c.eval.seed}}},
          {"serve", {{"host", c.serve.host}, {"port", c.serve.port}, {"turn_limit", c.serve.turn_limit}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"schema", "database", "actor", "candidate_cutoff", "model", "reward", "oracle", "data", "warmup",
                 "ppo", "eval", "serve"},
             "config");
  RunConfig c;
  try {
    if (j.contains("schema")) c.schema = j.at("schema").get<std::string>();
    if (j.contains("database")) c.database = j.at("database").get<std::string>();
    read_field(j, "actor", c.actor);
    read_field(j, "candidate_cutoff", c.candidate_cutoff);
    if (j.contains("model")) c.model = j.at("model").get<nn::ModelConfig>();
    if (j.contains("reward")) c.reward = j.at("reward").get<RewardConfig>();
    if (j.contains("oracle")) c.oracle = j.at("oracle").get<OracleOptions>();
    if (j.contains("warmup")) c.warmup = j.at("warmup").get<train::WarmupConfig>();
    if (j.contains("ppo")) c.ppo = j.at("ppo").get<train::PpoConfig>();
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"seed", "test_turns"}, "data");
      read_field(d, "seed", c.data.seed);
      read_field(d, "test_turns", c.data.test_turns);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, {"episodes", "seed"}, "eval");
      read_field(e, "episodes", c.eval.episodes);
      read_field(e, "seed", c.eval.seed);
    }
    if (j.contains("serve")) {
      const auto& s = j.at("serve");
      check_keys(s, {"host", "port", "turn_limit"}, "serve");
      read_field(s, "host", c.serve.host);
      read_field(s, "port", c.serve.port);
      read_field(s, "turn_limit", c.serve.turn_limit);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  if (c.actor != "word" && c.actor != "candidate") throw ValidationError("actor must be 'word' or 'candidate'");
  if (c.candidate_cutoff < 1) throw ValidationError("candidate_cutoff must be at least 1");
  if (c.data.test_turns < 0) throw ValidationError("data.test_turns must be non-negative");
  if (c.eval.episodes < 1) throw ValidationError("eval.episodes must be positive");
  if (c.serve.turn_limit < 1) throw ValidationError("serve.turn_limit must be positive");
  if (c.serve.port < 0 || c.serve.port > 65535) throw ValidationError("serve.port out of range");
  c.reward.validate();
  return c;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  nlohmann::json doc = to_json(RunConfig{});
  std::filesystem::path base;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw std::runtime_error("cannot open config file " + file->string());
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file->string() + ": " + e.what());
    }
    if (!user.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [k, v] : user.items()) {
      if (!doc.contains(k)) throw ValidationError("unknown key '" + k + "' in config");
    }
    doc.merge_patch(user);
    base = file->parent_path();
  }
  apply_env(doc, "", env);
  RunConfig c = run_config_from_json(doc);
  if (!base.empty()) {
    if (c.schema.is_relative()) c.schema = base / c.schema;
    if (c.database.is_relative()) c.database = base / c.database;
  }
  return c;
}

}  // namespace dialogen::app
