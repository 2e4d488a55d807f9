// dialogen: command-line entry point.
#include <csignal>
#include <iostream>

// Eigen must precede httplib, whose <resolv.h> defines a _res macro.
#include "dialogen/app/commands.hpp"
#include "dialogen/app/service.hpp"
#include "dialogen/core/error.hpp"

#include <CLI11.hpp>
#include <httplib.h>

namespace {

using namespace dialogen;

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

int serve(const app::Workspace& ws, const std::filesystem::path& run_dir,
          const std::optional<std::filesystem::path>& checkpoint) {
  app::SessionService::ModelMap models;
  auto add = [&](const std::filesystem::path& p) {
    auto agent = eval::load_agent(p, ws.schema);
    models.emplace(p.stem().string(), std::shared_ptr<const policy::ActorModel>(std::move(agent.actor)));
  };
  if (checkpoint) {
    add(*checkpoint);
  } else if (std::filesystem::is_directory(run_dir / "checkpoints")) {
    for (const auto& e : std::filesystem::directory_iterator(run_dir / "checkpoints")) {
      if (e.path().extension() == ".ckpt") add(e.path());
    }
  }
  if (models.empty()) throw std::runtime_error("no checkpoints to serve; pass --checkpoint");
  app::SessionService service(ws.schema, ws.db, std::move(models), run_dir / "sessions", ws.config.serve.turn_limit,
                              ws.config.data.seed);
  httplib::Server server;
  app::bind_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "listening on " << ws.config.serve.host << ":" << ws.config.serve.port << std::endl;
  if (!server.listen(ws.config.serve.host, ws.config.serve.port)) {
    throw std::runtime_error("cannot listen on port " + std::to_string(ws.config.serve.port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Word-level dialogue policy workbench"};
  cli.require_subcommand(1);

  std::optional<std::string> config_path;
  std::string run_dir = "runs/default";
  std::optional<std::uint64_t> seed;
  std::optional<long> frames;
  std::optional<std::string> checkpoint;
  std::optional<int> port;
  cli.add_option("--config", config_path, "JSON run configuration");
  cli.add_option("--run-dir", run_dir, "Directory for artifacts")->capture_default_str();
  cli.add_option("--seed", seed, "Training and corpus seed");
  cli.add_option("--frames", frames, "PPO frame budget");
  cli.add_option("--checkpoint", checkpoint, "Checkpoint to load");
  cli.add_option("--port", port, "Service port");

  auto* gen = cli.add_subcommand("gen-data", "Generate the expert corpus");
  auto* warm = cli.add_subcommand("warmup", "Supervised warm-up on the expert corpus");
  auto* ppo = cli.add_subcommand("train-ppo", "PPO fine-tuning from a warm-up checkpoint");
  auto* evaluate = cli.add_subcommand("evaluate", "Evaluate a checkpoint (or the oracle) on the simulator");
  auto* simulate = cli.add_subcommand("simulate", "Dump one scripted episode");
  auto* srv = cli.add_subcommand("serve", "Run the human-evaluation HTTP service");
  for (auto* sub : {gen, warm, ppo, evaluate, simulate, srv}) sub->fallthrough();

  CLI11_PARSE(cli, argc, argv);

  try {
    auto config = app::load_run_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt);
    if (seed) {
      config.ppo.seed = *seed;
      config.data.seed = *seed;
    }
    if (frames) config.ppo.total_frames = *frames;
    if (port) config.serve.port = *port;
    config.ppo.validate();
    const app::Workspace ws(config);
    const std::filesystem::path dir(run_dir);
    const auto ckpt = checkpoint ? std::optional<std::filesystem::path>(*checkpoint) : std::nullopt;

    if (gen->parsed()) {
      print(app::run_gen_data(ws, dir));
    } else if (warm->parsed()) {
      print(app::run_warmup(ws, dir));
    } else if (ppo->parsed()) {
      print(app::run_train_ppo(ws, dir, ckpt));
    } else if (evaluate->parsed()) {
      print(app::run_evaluate(ws, dir, ckpt));
    } else if (simulate->parsed()) {
      print(app::run_simulate(ws, ckpt, config.eval.seed));
    } else if (srv->parsed()) {
      return serve(ws, dir, ckpt);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
