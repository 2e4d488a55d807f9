#include <memory>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dialogen/app/commands.hpp"
#include "dialogen/app/config.hpp"
#include "dialogen/core/error.hpp"
#include "dialogen/eval/llm.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace dialogen {
namespace {

// JSON crosses the boundary as text; the Python package decodes it.
class Workbench {
 public:
  Workbench(const std::optional<std::filesystem::path>& config, const std::string& overrides)
      : ws_(std::make_unique<app::Workspace>(make_config(config, overrides))) {}

  std::string config() const { return app::to_json(ws_->config).dump(); }
  std::string schema() const { return ws_->schema.to_json().dump(); }

  std::string gen_data(const std::filesystem::path& run_dir) const { return app::run_gen_data(*ws_, run_dir).dump(); }
  std::string warmup(const std::filesystem::path& run_dir) const { return app::run_warmup(*ws_, run_dir).dump(); }
  std::string train_ppo(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& ckpt) const {
    return app::run_train_ppo(*ws_, run_dir, ckpt).dump();
  }
  std::string evaluate(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& ckpt) const {
    return app::run_evaluate(*ws_, run_dir, ckpt).dump();
  }
  std::string simulate(std::uint64_t seed, const std::optional<std::filesystem::path>& ckpt) const {
    return app::run_simulate(*ws_, ckpt, seed).dump();
  }

  std::string sample_goal(std::uint64_t seed) const {
    Rng rng(seed);
    return to_json(dialogen::sample_goal(ws_->schema, ws_->db, rng)).dump();
  }
  std::string linearize_target(const std::string& act) const {
    return json(dialogen::linearize_target(ws_->schema, act_from_json(json::parse(act)))).dump();
  }
  std::string parse_act_text(const std::vector<std::string>& tokens) const {
    const auto r = dialogen::parse_act_text(tokens, ws_->schema);
    json triplets = json::array();
    for (const auto& t : r.triplets) triplets.push_back({t.domain, t.intent, t.slot});
    json discarded = json::array();
    for (const auto& d : r.discarded) discarded.push_back({{"position", d.position}, {"token", d.token}, {"reason", d.reason}});
    return json{{"triplets", triplets}, {"discarded", discarded}, {"terminated_by_end", r.terminated_by_end}}.dump();
  }
  double shaping_bonus(const std::string& goal, const std::vector<std::string>& acts_per_turn, double lambda) const {
    const UserGoal g = goal_from_json(json::parse(goal));
    ShapingState st;
    double total = 0.0;
    for (const auto& a : acts_per_turn) total += dialogen::shaping_bonus(g, act_from_json(json::parse(a)), st, lambda);
    return total;
  }
  std::string build_llm_prompt(const std::string& history) const {
    std::vector<eval::PromptTurn> turns;
    for (const auto& t : json::parse(history)) {
      turns.push_back({act_from_json(t.at("user_act")), db_summary_from_json(t.at("db")),
                       act_from_json(t.value("system_act", json::array()))});
    }
    return eval::build_llm_prompt(ws_->schema, turns);
  }
  std::string parse_llm_reply(const std::string& text) const {
    return to_json(eval::parse_llm_reply(text, ws_->schema)).dump();
  }

 private:
  static app::RunConfig make_config(const std::optional<std::filesystem::path>& file, const std::string& overrides) {
    const json env = json::parse(overrides);
    return app::load_run_config(file, [env](const std::string& k) -> std::optional<std::string> {
      if (!env.contains(k)) return std::nullopt;
      return env[k].get<std::string>();
    });
  }

  std::unique_ptr<app::Workspace> ws_;
};

}  // namespace
}  // namespace dialogen

PYBIND11_MODULE(_core, m) {
  using dialogen::Workbench;
  m.doc() = "Word-level dialogue policy workbench (native core)";

  py::register_exception<dialogen::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<dialogen::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<dialogen::UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<dialogen::DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<Workbench>(m, "Workbench")
      .def(py::init<const std::optional<std::filesystem::path>&, const std::string&>(), py::arg("config"),
           py::arg("overrides") = "{}")
      .def("config", &Workbench::config)
      .def("schema", &Workbench::schema)
      .def("gen_data", &Workbench::gen_data, py::arg("run_dir"), py::call_guard<py::gil_scoped_release>())
      .def("warmup", &Workbench::warmup, py::arg("run_dir"), py::call_guard<py::gil_scoped_release>())
      .def("train_ppo", &Workbench::train_ppo, py::arg("run_dir"), py::arg("checkpoint") = std::nullopt,
           py::call_guard<py::gil_scoped_release>())
      .def("evaluate", &Workbench::evaluate, py::arg("run_dir"), py::arg("checkpoint") = std::nullopt,
           py::call_guard<py::gil_scoped_release>())
      .def("simulate", &Workbench::simulate, py::arg("seed"), py::arg("checkpoint") = std::nullopt)
      .def("sample_goal", &Workbench::sample_goal, py::arg("seed"))
      .def("linearize_target", &Workbench::linearize_target, py::arg("act"))
      .def("parse_act_text", &Workbench::parse_act_text, py::arg("tokens"))
      .def("shaping_bonus", &Workbench::shaping_bonus, py::arg("goal"), py::arg("acts"), py::arg("lam") = 3.0)
      .def("build_llm_prompt", &Workbench::build_llm_prompt, py::arg("history"))
      .def("parse_llm_reply", &Workbench::parse_llm_reply, py::arg("text"));
}
