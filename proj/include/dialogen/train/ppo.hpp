#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/neural/model.hpp"
#include "dialogen/neural/optimizer.hpp"
#include "dialogen/policy/policy.hpp"
#include "dialogen/simulator/simulator.hpp"

namespace dialogen::train {

struct PpoConfig {
  double actor_lr = 5e-7;
  double critic_lr = 1e-4;
  double clip_epsilon = 0.2;
  long total_frames = 50000;
  int batch_frames = 512;
  int update_epochs = 4;
  int minibatch_size = 64;
  bool reward_shaping = true;
  bool normalize_advantages = true;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  // Greedy evaluation on fixed goals every eval_interval frames (0 = only at
  // the start and the end).
  long eval_interval = 1024;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1000;
  // Test hooks.
  bool unclipped = false;    // surrogate becomes -ratio * A
  bool use_returns = false;  // discounted returns replace advantages

  void validate() const;
};

void to_json(nlohmann::json& j, const PpoConfig& c);
void from_json(const nlohmann::json& j, PpoConfig& c);

// One system turn.
struct Frame {
  policy::EncodedState state;
  std::vector<int> action;
  double old_log_prob = 0.0;
  double reward = 0.0;      // shaped when shaping is on
  double env_reward = 0.0;  // unshaped
  double value = 0.0;       // V(s) under the collecting critic
  bool done = false;
  std::optional<policy::EncodedState> next_state;  // absent when done
};

struct EpisodeSummary {
  bool success = false;
  int system_turns = 0;
  double env_return = 0.0;
};

struct RolloutBuffer {
  std::vector<Frame> frames;
  std::vector<EpisodeSummary> episodes;

  std::size_t size() const { return frames.size(); }
};

// Plays whole episodes with sampled actions until at least n_frames system
// turns are recorded.
RolloutBuffer collect(const policy::ActorModel& actor, const nn::CriticNet& critic, const UserSimulator& sim,
                      long n_frames, bool shaping, Rng& rng);

// A_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), both values from `critic`.
std::vector<double> advantages(const RolloutBuffer& buffer, const nn::CriticNet& critic, double gamma);
// r_t + gamma * V(s_{t+1}) * (1 - done_t).
std::vector<double> value_targets(const RolloutBuffer& buffer, const nn::CriticNet& critic, double gamma);
// Discounted reward-to-go within each episode.
std::vector<double> discounted_returns(const RolloutBuffer& buffer, double gamma);
// Mean 0, std 1 (std floored at 1e-8).
void normalize(std::vector<double>& xs);

// Mean over frames of -min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A),
// ratio = exp(log pi(a|s) - old log-prob). Unclipped: mean of -ratio * A.
nn::Var ppo_actor_loss(nn::Tape& tape, policy::ActorModel& actor, std::span<const Frame* const> frames,
                       std::span<const double> adv, double eps, bool unclipped);
// Mean squared error of V(s) against fixed targets.
nn::Var value_loss(nn::Tape& tape, nn::CriticNet& critic, std::span<const Frame* const> frames,
                   std::span<const double> targets);

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  int steps = 0;
};

UpdateStats ppo_update(policy::ActorModel& actor, nn::CriticNet& critic, const RolloutBuffer& buffer,
                       const PpoConfig& config, double gamma, nn::Adam& actor_opt, nn::Adam& critic_opt, Rng& rng);

struct MetricsRow {
  long frame = 0;
  double success_rate = 0.0;
  double avg_turns = 0.0;
  double avg_reward = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const MetricsRow&) const = default;
};

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);
std::string metrics_csv(std::span<const MetricsRow> rows);

struct PpoResult {
  std::vector<MetricsRow> metrics;
  long frames = 0;
  int updates = 0;
};

// collect -> advantages -> ppo_update until total_frames. Metrics rows are
// greedy evaluations on fixed goals, the first one before any update.
// `on_eval` runs after every evaluation (checkpointing hook).
PpoResult train_ppo(policy::ActorModel& actor, nn::CriticNet& critic, const UserSimulator& sim,
                    const PpoConfig& config, const std::function<void(const MetricsRow&)>& on_eval = {});

}  // namespace dialogen::train
