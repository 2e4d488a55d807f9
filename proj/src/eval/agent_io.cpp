#include "dialogen/eval/agent_io.hpp"

#include "dialogen/core/error.hpp"
#include "dialogen/eval/candidate.hpp"
#include "dialogen/neural/checkpoint.hpp"

namespace dialogen::eval {

void save_agent(const std::filesystem::path& path, const policy::ActorModel& actor, const nn::CriticNet* critic,
                const nlohmann::json& meta) {
  nlohmann::json header = {{"actor", actor.header()}, {"has_critic", critic != nullptr}, {"meta", meta}};
  std::vector<const nn::ParamStore*> stores{&actor.params()};
  if (critic) stores.push_back(&critic->params());
  nn::save_checkpoint(path, header, stores);
}

Agent load_agent(const std::filesystem::path& path, const Schema& schema) {
  const nn::CheckpointFile file = nn::read_checkpoint(path);
  const auto& h = file.header;
  const auto& ah = h.at("actor");
  const auto config = ah.at("model").get<nn::ModelConfig>();
  nn::Vocabulary vocab(ah.at("vocabulary").get<std::vector<std::string>>());
  if (vocab.tokens() != nn::Vocabulary(schema).tokens()) {
    throw ValidationError("checkpoint vocabulary does not match the schema");
  }
  Agent agent;
  const auto kind = ah.at("kind").get<std::string>();
  if (kind == "word") {
    agent.actor = std::make_unique<policy::WordActor>(schema, nn::ActorNet(config, vocab, 0));
  } else if (kind == "candidate") {
    std::vector<Template> templates;
    for (const auto& row : ah.at("candidates")) {
      Template t;
      for (const auto& a : row) t.push_back({a.at(0).get<std::string>(), a.at(1).get<std::string>(), a.at(2).get<std::string>()});
      templates.push_back(std::move(t));
    }
    agent.actor = std::make_unique<CandidateActor>(schema, CandidateSet(std::move(templates)), config, 0);
  } else {
    throw ValidationError("unknown actor kind '" + kind + "'");
  }
  nn::restore_params(agent.actor->params(), file);
  if (h.value("has_critic", false)) {
    agent.critic.emplace(config, vocab, 0);
    nn::restore_params(agent.critic->params(), file);
  }
  agent.meta = h.value("meta", nlohmann::json::object());
  return agent;
}

}  // namespace dialogen::eval
