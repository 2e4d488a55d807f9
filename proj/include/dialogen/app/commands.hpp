#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dialogen/app/config.hpp"
#include "dialogen/db/database.hpp"
#include "dialogen/eval/agent_io.hpp"
#include "dialogen/eval/evaluate.hpp"
#include "dialogen/simulator/simulator.hpp"
#include "dialogen/train/corpus.hpp"
#include "dialogen/train/ppo.hpp"

namespace dialogen::app {

// Schema, database and simulator loaded from a run config. Not movable: the
// simulator refers to the other two members.
struct Workspace {
  Workspace(const RunConfig& config);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  RunConfig config;
  Schema schema;
  Database db;
  UserSimulator sim;
};

struct CorpusSplits {
  std::vector<train::CorpusRecord> train;
  std::vector<train::CorpusRecord> valid;
  std::vector<train::CorpusRecord> test;
};

// Expert corpus from the oracle; the three splits use seeds data.seed,
// data.seed + 1 and data.seed + 2.
CorpusSplits generate_splits(const Workspace& ws);

// Run-directory layout.
std::filesystem::path corpus_path(const std::filesystem::path& run_dir, const std::string& split);
std::filesystem::path warmup_checkpoint(const std::filesystem::path& run_dir);
std::filesystem::path ppo_checkpoint(const std::filesystem::path& run_dir);

void write_config_snapshot(const RunConfig& config, const std::filesystem::path& run_dir);

// Each returns a JSON summary and writes its artifacts under run_dir.
nlohmann::json run_gen_data(const Workspace& ws, const std::filesystem::path& run_dir);
nlohmann::json run_warmup(const Workspace& ws, const std::filesystem::path& run_dir);
nlohmann::json run_train_ppo(const Workspace& ws, const std::filesystem::path& run_dir,
                             const std::optional<std::filesystem::path>& checkpoint);
nlohmann::json run_evaluate(const Workspace& ws, const std::filesystem::path& run_dir,
                            const std::optional<std::filesystem::path>& checkpoint);
// One scripted episode with the oracle (no checkpoint) or a trained actor.
nlohmann::json run_simulate(const Workspace& ws, const std::optional<std::filesystem::path>& checkpoint,
                            std::uint64_t seed);

}  // namespace dialogen::app
