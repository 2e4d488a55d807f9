#include "dialogen/app/commands.hpp"

#include <fstream>

#include "dialogen/core/error.hpp"
#include "dialogen/eval/candidate.hpp"
#include "dialogen/train/warmup.hpp"

namespace dialogen::app {

namespace {

Schema load_schema_checked(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw std::runtime_error("schema file not found: " + p.string());
  return Schema::load(p);
}

Database load_db_checked(const std::filesystem::path& p, const Schema& schema) {
  if (!std::filesystem::exists(p)) throw std::runtime_error("database file not found: " + p.string());
  return load_database(p, schema);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<train::CorpusRecord> load_or_generate(const Workspace& ws, const std::filesystem::path& run_dir,
                                                  const std::string& split) {
  const auto p = corpus_path(run_dir, split);
  if (std::filesystem::exists(p)) return train::read_corpus(p, ws.schema);
  run_gen_data(ws, run_dir);
  return train::read_corpus(p, ws.schema);
}

std::unique_ptr<policy::ActorModel> make_actor(const Workspace& ws, const std::vector<train::CorpusRecord>& corpus) {
  const auto seed = ws.config.ppo.seed;
  if (ws.config.actor == "word") return std::make_unique<policy::WordActor>(ws.schema, ws.config.model, seed);
  std::vector<DialogueAct> acts;
  acts.reserve(corpus.size());
  for (const auto& r : corpus) acts.push_back(r.target_act);
  return std::make_unique<eval::CandidateActor>(
      ws.schema, eval::extract_candidates(acts, ws.schema, ws.config.candidate_cutoff), ws.config.model, seed);
}

}  // namespace

Workspace::Workspace(const RunConfig& c)
    : config(c),
      schema(load_schema_checked(c.schema)),
      db(load_db_checked(c.database, schema)),
      sim(schema, db, c.reward) {}

CorpusSplits generate_splits(const Workspace& ws) {
  OraclePolicy oracle(ws.schema, ws.db, ws.config.oracle);
  const auto seed = ws.config.data.seed;
  return {train::generate_expert_data(ws.sim, oracle, ws.config.warmup.train_turns, seed),
          train::generate_expert_data(ws.sim, oracle, ws.config.warmup.valid_turns, seed + 1),
          train::generate_expert_data(ws.sim, oracle, ws.config.data.test_turns, seed + 2)};
}

std::filesystem::path corpus_path(const std::filesystem::path& run_dir, const std::string& split) {
  return run_dir / "corpus" / (split + ".jsonl");
}
std::filesystem::path warmup_checkpoint(const std::filesystem::path& run_dir) {
  return run_dir / "checkpoints" / "warmup.ckpt";
}
std::filesystem::path ppo_checkpoint(const std::filesystem::path& run_dir) {
  return run_dir / "checkpoints" / "ppo.ckpt";
}

void write_config_snapshot(const RunConfig& config, const std::filesystem::path& run_dir) {
  write_json(run_dir / "config.json", to_json(config));
}

nlohmann::json run_gen_data(const Workspace& ws, const std::filesystem::path& run_dir) {
  write_config_snapshot(ws.config, run_dir);
  const auto splits = generate_splits(ws);
  train::write_corpus(corpus_path(run_dir, "train"), splits.train);
  train::write_corpus(corpus_path(run_dir, "valid"), splits.valid);
  train::write_corpus(corpus_path(run_dir, "test"), splits.test);
  return {{"train", splits.train.size()}, {"valid", splits.valid.size()}, {"test", splits.test.size()}};
}

nlohmann::json run_warmup(const Workspace& ws, const std::filesystem::path& run_dir) {
  write_config_snapshot(ws.config, run_dir);
  const auto train_set = load_or_generate(ws, run_dir, "train");
  const auto valid_set = load_or_generate(ws, run_dir, "valid");
  const auto test_set = load_or_generate(ws, run_dir, "test");
  auto actor = make_actor(ws, train_set);
  const auto result = train::warmup(*actor, train_set, valid_set, ws.config.warmup, ws.config.ppo.seed);
  nn::CriticNet critic(ws.config.model, actor->vocab(), ws.config.ppo.seed + 1);
  eval::save_agent(warmup_checkpoint(run_dir), *actor, &critic, {{"stage", "warmup"}});
  nlohmann::json summary = {{"parameters", actor->params().count()},
                            {"critic_parameters", critic.params().count()},
                            {"best_epoch", result.best_epoch},
                            {"epochs_run", result.epochs_run},
                            {"best_valid_nll", result.best_valid_nll},
                            {"train_nll", result.train_nll},
                            {"valid_nll", result.valid_nll},
                            {"test_exact_match", test_set.empty() ? 0.0
                                                                  : train::exact_match_accuracy(*actor, ws.db, test_set)},
                            {"checkpoint", warmup_checkpoint(run_dir).string()}};
  write_json(run_dir / "warmup.json", summary);
  return summary;
}

nlohmann::json run_train_ppo(const Workspace& ws, const std::filesystem::path& run_dir,
                             const std::optional<std::filesystem::path>& checkpoint) {
  write_config_snapshot(ws.config, run_dir);
  const auto ckpt = checkpoint.value_or(warmup_checkpoint(run_dir));
  if (!std::filesystem::exists(ckpt)) throw std::runtime_error("checkpoint not found: " + ckpt.string());
  auto agent = eval::load_agent(ckpt, ws.schema);
  if (!agent.critic) agent.critic.emplace(agent.actor->config(), agent.actor->vocab(), ws.config.ppo.seed + 1);
  const auto metrics_path = run_dir / "metrics.csv";
  std::vector<train::MetricsRow> rows;
  auto on_eval = [&](const train::MetricsRow& row) {
    rows.push_back(row);
    train::write_metrics_csv(metrics_path, rows);
    eval::save_agent(ppo_checkpoint(run_dir), *agent.actor, &*agent.critic,
                     {{"stage", "ppo"}, {"frame", row.frame}});
  };
  const auto result = train::train_ppo(*agent.actor, *agent.critic, ws.sim, ws.config.ppo, on_eval);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& r : result.metrics) {
    curve.push_back({{"frame", r.frame}, {"success_rate", r.success_rate}, {"avg_turns", r.avg_turns},
                     {"avg_reward", r.avg_reward}});
  }
  return {{"frames", result.frames},
          {"updates", result.updates},
          {"metrics", curve},
          {"metrics_csv", metrics_path.string()},
          {"checkpoint", ppo_checkpoint(run_dir).string()}};
}

nlohmann::json run_evaluate(const Workspace& ws, const std::filesystem::path& run_dir,
                            const std::optional<std::filesystem::path>& checkpoint) {
  write_config_snapshot(ws.config, run_dir);
  eval::EvalReport report;
  std::string source;
  if (checkpoint) {
    if (!std::filesystem::exists(*checkpoint)) throw std::runtime_error("checkpoint not found: " + checkpoint->string());
    const auto agent = eval::load_agent(*checkpoint, ws.schema);
    report = eval::evaluate(*agent.actor, ws.sim, ws.config.eval.episodes, ws.config.eval.seed);
    source = checkpoint->string();
  } else {
    OraclePolicy oracle(ws.schema, ws.db, ws.config.oracle);
    eval::SystemPolicy p = [&](const Observation& o, const SimulatorState& s, Rng& r) { return oracle.act(o, s, r); };
    report = eval::evaluate(p, ws.sim, ws.config.eval.episodes, ws.config.eval.seed);
    source = "oracle";
  }
  nlohmann::json j = report;
  j["policy"] = source;
  write_json(run_dir / "eval_report.json", j);
  eval::write_transcripts(run_dir / "transcripts.jsonl", report);
  return j;
}

nlohmann::json run_simulate(const Workspace& ws, const std::optional<std::filesystem::path>& checkpoint,
                            std::uint64_t seed) {
  eval::SystemPolicy p;
  std::unique_ptr<policy::ActorModel> actor;
  OraclePolicy oracle(ws.schema, ws.db, ws.config.oracle);
  if (checkpoint) {
    actor = std::move(eval::load_agent(*checkpoint, ws.schema).actor);
    p = [&](const Observation& o, const SimulatorState&, Rng& r) {
      return policy::act(*actor, ws.db, o, r, policy::DecodeMode::kGreedy).act;
    };
  } else {
    p = [&](const Observation& o, const SimulatorState& s, Rng& r) { return oracle.act(o, s, r); };
  }
  const auto report = eval::evaluate(p, ws.sim, 1, seed);
  return report.episodes.front();
}

}  // namespace dialogen::app
