#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/db/database.hpp"
#include "dialogen/policy/policy.hpp"

namespace httplib {
class Server;
}

namespace dialogen::app {

struct SessionTurn {
  std::string speaker;
  DialogueAct act;
  std::string text;
};

struct Session {
  std::string id;
  std::string model_id;
  UserGoal goal;
  std::vector<SessionTurn> transcript;
  std::string status = "active";  // active | success | failure
  std::string outcome_source;     // "evaluator" or "turn_limit" once terminal
  int turn_limit = 20;
  int turns = 0;
  std::string created_at;
  // Act-level state tracking.
  BeliefState belief;
  DbResultSummary db;
  DialogueAct last_system_act;
};

nlohmann::json to_json(const Session& s);

struct Response {
  int status = 200;
  nlohmann::json body;
};

// HTTP-independent session logic. Every mutation is appended to
// <store_dir>/<session id>.jsonl before it is acknowledged; a new service
// over the same directory replays those files.
class SessionService {
 public:
  using ModelMap = std::map<std::string, std::shared_ptr<const policy::ActorModel>>;

  SessionService(Schema schema, Database db, ModelMap models, std::filesystem::path store_dir, int turn_limit = 20,
                 std::uint64_t seed = 0);

  Response create_session(const nlohmann::json& body);
  Response turn(const std::string& id, const nlohmann::json& body);
  Response outcome(const std::string& id, const nlohmann::json& body);
  Response get_session(const std::string& id) const;
  Response list_models() const;
  Response schema() const;

  std::size_t session_count() const;

 private:
  void load_sessions();
  void append(const std::string& id, const nlohmann::json& event) const;
  std::string new_id();

  Schema schema_;
  Database db_;
  ModelMap models_;
  std::filesystem::path store_dir_;
  int turn_limit_;
  Rng rng_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
};

// Parses a user act from [[d, i, s, v], ...] or [{"domain", "intent", "slot",
// "value"}, ...]. Throws ValidationError whose message names the field.
struct ActFieldError {
  std::size_t index = 0;
  std::string field;
  std::string message;
};
DialogueAct parse_user_act(const nlohmann::json& j, const Schema& schema, ActFieldError* error);

// Registers every endpoint on `server`.
void bind_routes(httplib::Server& server, SessionService& service);

}  // namespace dialogen::app
