#include "dialogen/app/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>

#include "dialogen/app/nlg.hpp"
#include "dialogen/core/error.hpp"
#include "dialogen/simulator/simulator.hpp"

namespace dialogen::app {

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

Response error(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return {status, extra};
}

void apply_user_act(Session& s, const Database& db, const DialogueAct& act) {
  track_belief(s.belief, act);
  s.db = match_counts(db, s.belief);
}

}  // namespace

nlohmann::json to_json(const Session& s) {
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& t : s.transcript) {
    transcript.push_back({{"speaker", t.speaker}, {"act", dialogen::to_json(t.act)}, {"text", t.text}});
  }
  return {{"session_id", s.id},
          {"model_id", s.model_id},
          {"goal", dialogen::to_json(s.goal)},
          {"transcript", transcript},
          {"status", s.status},
          {"outcome_source", s.outcome_source},
          {"turn_limit", s.turn_limit},
          {"turns", s.turns},
          {"created_at", s.created_at}};
}

DialogueAct parse_user_act(const nlohmann::json& j, const Schema& schema, ActFieldError* error) {
  auto fail = [&](std::size_t i, const std::string& field, const std::string& msg) -> DialogueAct {
    if (error) *error = {i, field, msg};
    throw ValidationError(msg);
  };
  if (!j.is_array()) return fail(0, "user_act", "user_act must be a list of quadruples");
  DialogueAct act;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& q = j[i];
    std::string f[4];
    static const char* names[4] = {"domain", "intent", "slot", "value"};
    if (q.is_array() && q.size() == 4) {
      for (int k = 0; k < 4; ++k) {
        if (!q[k].is_string()) return fail(i, names[k], std::string(names[k]) + " must be a string");
        f[k] = q[k].get<std::string>();
      }
    } else if (q.is_object()) {
      for (int k = 0; k < 4; ++k) {
        if (!q.contains(names[k]) || !q[names[k]].is_string()) {
          return fail(i, names[k], std::string(names[k]) + " must be a string");
        }
        f[k] = q[names[k]].get<std::string>();
      }
    } else {
      return fail(i, "user_act", "quadruple " + std::to_string(i) + " must be [domain, intent, slot, value]");
    }
    f[3] = normalize_value(f[3]);
    if (!schema.has_domain(f[0])) return fail(i, "domain", "unknown domain '" + f[0] + "'");
    if (!schema.has_intent(f[1])) return fail(i, "intent", "unknown intent '" + f[1] + "'");
    if (!schema.has_slot(f[0], f[2])) {
      return fail(i, "slot", "unknown slot '" + f[2] + "' for domain '" + f[0] + "'");
    }
    if (f[1] == kRequestIntent) {
      if (f[3] != kRequestValue) return fail(i, "value", "request of slot '" + f[2] + "' must carry value '?'");
    } else if (f[1] == "inform" && f[3] != kNoneValue && !schema.has_value(f[0], f[2], f[3])) {
      return fail(i, "value", "unknown value '" + f[3] + "' for slot '" + f[2] + "'");
    }
    act.quads.push_back({f[0], f[1], f[2], f[3]});
  }
  return act;
}

SessionService::SessionService(Schema schema, Database db, ModelMap models, std::filesystem::path store_dir,
                               int turn_limit, std::uint64_t seed)
    : schema_(std::move(schema)),
      db_(std::move(db)),
      models_(std::move(models)),
      store_dir_(std::move(store_dir)),
      turn_limit_(turn_limit),
      rng_(seed) {
  if (models_.empty()) throw ValidationError("service needs at least one model");
  if (turn_limit_ < 1) throw ValidationError("turn limit must be positive");
  std::filesystem::create_directories(store_dir_);
  load_sessions();
}

void SessionService::append(const std::string& id, const nlohmann::json& event) const {
  std::ofstream out(store_dir_ / (id + ".jsonl"), std::ios::app);
  if (!out) throw std::runtime_error("cannot write session " + id);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot write session " + id);
}

void SessionService::load_sessions() {
  for (const auto& entry : std::filesystem::directory_iterator(store_dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    std::ifstream in(entry.path());
    std::string line;
    Session s;
    bool created = false;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json ev;
      try {
        ev = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(entry.path().string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
      const auto kind = ev.at("event").get<std::string>();
      if (kind == "created") {
        s.id = ev.at("session_id").get<std::string>();
        s.model_id = ev.at("model_id").get<std::string>();
        s.goal = goal_from_json(ev.at("goal"));
        s.turn_limit = ev.at("turn_limit").get<int>();
        s.created_at = ev.at("created_at").get<std::string>();
        created = true;
      } else if (kind == "turn" && created) {
        const DialogueAct user = act_from_json(ev.at("user_act"));
        const DialogueAct sys = act_from_json(ev.at("system_act"));
        s.transcript.push_back({"user", user, render_act(user)});
        s.transcript.push_back({"system", sys, ev.at("rendered_text").get<std::string>()});
        apply_user_act(s, db_, user);
        s.last_system_act = sys;
        s.turns = ev.at("turn_index").get<int>();
      } else if (kind == "outcome" && created) {
        s.status = ev.at("success").get<bool>() ? "success" : "failure";
        s.outcome_source = ev.at("source").get<std::string>();
      } else {
        throw ParseError(entry.path().string() + ":" + std::to_string(lineno) + ": unexpected event '" + kind + "'");
      }
    }
    if (created) sessions_.emplace(s.id, std::move(s));
  }
}

std::string SessionService::new_id() {
  while (true) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << rng_();
    if (!sessions_.contains(out.str()) && !std::filesystem::exists(store_dir_ / (out.str() + ".jsonl"))) {
      return out.str();
    }
  }
}

Response SessionService::create_session(const nlohmann::json& body) {
  std::lock_guard lock(mu_);
  if (!body.is_object()) return error(400, "body must be a JSON object");
  std::string model_id;
  if (body.contains("model_id")) {
    if (!body["model_id"].is_string()) return error(400, "model_id must be a string", {{"field", "model_id"}});
    model_id = body["model_id"].get<std::string>();
  } else {
    model_id = models_.begin()->first;
  }
  if (!models_.contains(model_id)) return error(404, "unknown model '" + model_id + "'", {{"field", "model_id"}});
  Session s;
  s.id = new_id();
  s.model_id = model_id;
  s.goal = sample_goal(schema_, db_, rng_);
  s.turn_limit = turn_limit_;
  s.created_at = utc_now();
  append(s.id, {{"event", "created"},
                {"session_id", s.id},
                {"model_id", s.model_id},
                {"goal", dialogen::to_json(s.goal)},
                {"turn_limit", s.turn_limit},
                {"created_at", s.created_at}});
  Response r{200, {{"session_id", s.id}, {"goal", dialogen::to_json(s.goal)}, {"turn_limit", s.turn_limit}}};
  sessions_.emplace(s.id, std::move(s));
  return r;
}

Response SessionService::turn(const std::string& id, const nlohmann::json& body) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return error(404, "unknown session '" + id + "'");
  Session& s = it->second;
  if (s.status != "active") {
    return error(409, "session is " + s.status, {{"status", s.status}, {"turn_index", s.turns}});
  }
  if (!body.is_object() || !body.contains("user_act")) {
    return error(400, "body must contain user_act", {{"field", "user_act"}});
  }
  ActFieldError fe;
  DialogueAct user;
  try {
    user = parse_user_act(body["user_act"], schema_, &fe);
  } catch (const ValidationError& e) {
    return error(400, e.what(), {{"field", fe.field}, {"index", fe.index}});
  }

  Session next = s;
  apply_user_act(next, db_, user);
  Rng rng(0);
  const auto decision = policy::act(*models_.at(s.model_id), db_, user, s.last_system_act, next.belief, next.db, rng,
                                    policy::DecodeMode::kGreedy);
  const std::string text = render_act(decision.act);
  next.transcript.push_back({"user", user, render_act(user)});
  next.transcript.push_back({"system", decision.act, text});
  next.last_system_act = decision.act;
  next.turns += 1;
  append(s.id, {{"event", "turn"},
                {"user_act", dialogen::to_json(user)},
                {"system_act", dialogen::to_json(decision.act)},
                {"rendered_text", text},
                {"turn_index", next.turns}});
  if (next.turns >= next.turn_limit) {
    next.status = "failure";
    next.outcome_source = "turn_limit";
    append(s.id, {{"event", "outcome"}, {"success", false}, {"source", next.outcome_source}});
  }
  s = std::move(next);
  return {200,
          {{"system_act", dialogen::to_json(s.last_system_act)},
           {"rendered_text", text},
           {"turn_index", s.turns},
           {"status", s.status}}};
}

Response SessionService::outcome(const std::string& id, const nlohmann::json& body) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return error(404, "unknown session '" + id + "'");
  Session& s = it->second;
  if (!body.is_object() || !body.contains("success") || !body["success"].is_boolean()) {
    return error(400, "body must contain boolean success", {{"field", "success"}});
  }
  if (s.status != "active") return error(409, "outcome already recorded", {{"status", s.status}});
  const bool ok = body["success"].get<bool>();
  append(s.id, {{"event", "outcome"}, {"success", ok}, {"source", "evaluator"}});
  s.status = ok ? "success" : "failure";
  s.outcome_source = "evaluator";
  return {200, {{"session_id", s.id}, {"status", s.status}}};
}

Response SessionService::get_session(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return error(404, "unknown session '" + id + "'");
  return {200, to_json(it->second)};
}

Response SessionService::list_models() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& [id, actor] : models_) models.push_back({{"model_id", id}, {"kind", actor->kind()}});
  return {200, {{"models", models}}};
}

Response SessionService::schema() const { return {200, schema_.to_json()}; }

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void bind_routes(httplib::Server& server, SessionService& service) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req, nlohmann::json& out) {
    if (req.body.empty()) {
      out = nlohmann::json::object();
      return true;
    }
    try {
      out = nlohmann::json::parse(req.body);
      return true;
    } catch (const nlohmann::json::exception&) {
      return false;
    }
  };
  auto guarded = [send](httplib::Response& res, const std::function<Response()>& fn) {
    try {
      send(res, fn());
    } catch (const std::exception& e) {
      send(res, error(500, e.what()));
    }
  };

  server.Post("/sessions", [=, &service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse(req, body)) return send(res, error(400, "malformed JSON"));
    guarded(res, [&] { return service.create_session(body); });
  });
  server.Post(R"(/sessions/([^/]+)/turn)", [=, &service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse(req, body)) return send(res, error(400, "malformed JSON"));
    guarded(res, [&] { return service.turn(req.matches[1], body); });
  });
  server.Post(R"(/sessions/([^/]+)/outcome)", [=, &service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse(req, body)) return send(res, error(400, "malformed JSON"));
    guarded(res, [&] { return service.outcome(req.matches[1], body); });
  });
  server.Get(R"(/sessions/([^/]+))", [=, &service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.get_session(req.matches[1]); });
  });
  server.Get("/models", [=, &service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.list_models(); });
  });
  server.Get("/schema", [=, &service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.schema(); });
  });
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace dialogen::app
