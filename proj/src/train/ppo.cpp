#include "dialogen/train/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dialogen/core/error.hpp"
#include "dialogen/core/linearize.hpp"
#include "dialogen/eval/evaluate.hpp"

namespace dialogen::train {

void PpoConfig::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ValidationError("ppo learning rates must be positive");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ValidationError("clip_epsilon must lie in (0, 1)");
  if (total_frames <= 0) throw ValidationError("total_frames must be positive");
  if (batch_frames <= 0 || update_epochs <= 0 || minibatch_size <= 0) {
    throw ValidationError("ppo batch sizes and epochs must be positive");
  }
  if (eval_interval < 0) throw ValidationError("eval_interval must be non-negative");
  if (eval_episodes <= 0) throw ValidationError("eval_episodes must be positive");
}

void to_json(nlohmann::json& j, const PpoConfig& c) {
  j = {{"actor_lr", c.actor_lr},
       {"critic_lr", c.critic_lr},
       {"clip_epsilon", c.clip_epsilon},
       {"total_frames", c.total_frames},
       {"batch_frames", c.batch_frames},
       {"update_epochs", c.update_epochs},
       {"minibatch_size", c.minibatch_size},
       {"reward_shaping", c.reward_shaping},
       {"normalize_advantages", c.normalize_advantages},
       {"clip_norm", c.clip_norm},
       {"seed", c.seed},
       {"eval_interval", c.eval_interval},
       {"eval_episodes", c.eval_episodes},
       {"eval_seed", c.eval_seed}};
}

void from_json(const nlohmann::json& j, PpoConfig& c) {
  if (!j.is_object()) throw ValidationError("ppo config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "actor_lr") c.actor_lr = v.get<double>();
    else if (key == "critic_lr") c.critic_lr = v.get<double>();
    else if (key == "clip_epsilon") c.clip_epsilon = v.get<double>();
    else if (key == "total_frames") c.total_frames = v.get<long>();
    else if (key == "batch_frames") c.batch_frames = v.get<int>();
    else if (key == "update_epochs") c.update_epochs = v.get<int>();
    else if (key == "minibatch_size") c.minibatch_size = v.get<int>();
    else if (key == "reward_shaping") c.reward_shaping = v.get<bool>();
    else if (key == "normalize_advantages") c.normalize_advantages = v.get<bool>();
    else if (key == "clip_norm") c.clip_norm = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "eval_interval") c.eval_interval = v.get<long>();
    else if (key == "eval_episodes") c.eval_episodes = v.get<int>();
    else if (key == "eval_seed") c.eval_seed = v.get<std::uint64_t>();
    else throw ValidationError("unknown ppo key '" + key + "'");
  }
  c.validate();
}

RolloutBuffer collect(const policy::ActorModel& actor, const nn::CriticNet& critic, const UserSimulator& sim,
                      long n_frames, bool shaping, Rng& rng) {
  RolloutBuffer buf;
  const double lambda = sim.config().lambda;
  while (static_cast<long>(buf.frames.size()) < n_frames || buf.episodes.empty()) {
    Episode ep(sim, sample_goal(sim.schema(), sim.db(), rng));
    ShapingState shaping_state;
    EpisodeSummary summary;
    while (!ep.done()) {
      auto d = policy::act(actor, sim.db(), ep.observation(), rng, policy::DecodeMode::kSample);
      Frame f;
      f.value = critic.value(d.encoded);
      f.state = std::move(d.encoded);
      f.action = std::move(d.action);
      f.old_log_prob = d.log_prob;
      const double bonus = shaping_bonus(ep.state().goal, d.act, shaping_state, lambda);
      auto res = ep.advance(d.act);
      f.env_reward = res.env_reward;
      f.reward = res.env_reward + (shaping ? bonus : 0.0);
      f.done = res.terminal;
      if (!f.done) {
        const auto& o = ep.observation();
        f.next_state = actor.encode(build_state_text(actor.schema(), o.user_act, o.last_system_act, o.belief, o.db));
      }
      summary.env_return += res.env_reward;
      buf.frames.push_back(std::move(f));
    }
    summary.success = ep.state().success;
    summary.system_turns = ep.state().system_turns;
    buf.episodes.push_back(summary);
  }
  return buf;
}

std::vector<double> value_targets(const RolloutBuffer& buffer, const nn::CriticNet& critic, double gamma) {
  std::vector<double> out;
  out.reserve(buffer.size());
  for (const auto& f : buffer.frames) {
    double t = f.reward;
    if (!f.done && f.next_state) t += gamma * critic.value(*f.next_state);
    out.push_back(t);
  }
  return out;
}

std::vector<double> advantages(const RolloutBuffer& buffer, const nn::CriticNet& critic, double gamma) {
  auto out = value_targets(buffer, critic, gamma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= critic.value(buffer.frames[i].state);
  return out;
}

std::vector<double> discounted_returns(const RolloutBuffer& buffer, double gamma) {
  std::vector<double> out(buffer.size());
  double running = 0.0;
  for (std::size_t i = buffer.size(); i-- > 0;) {
    const auto& f = buffer.frames[i];
    if (f.done) running = 0.0;
    running = f.reward + gamma * running;
    out[i] = running;
  }
  return out;
}

void normalize(std::vector<double>& xs) {
  if (xs.empty()) return;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::max(std::sqrt(var / n), 1e-8);
  for (double& x : xs) x = (x - mean) / sd;
}

nn::Var ppo_actor_loss(nn::Tape& tape, policy::ActorModel& actor, std::span<const Frame* const> frames,
                       std::span<const double> adv, double eps, bool unclipped) {
  if (frames.empty() || frames.size() != adv.size()) throw UsageError("ppo_actor_loss: bad batch");
  std::vector<nn::Var> terms;
  terms.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = *frames[i];
    nn::Var lp = tape.sum(actor.token_log_probs(tape, f.state, f.action));
    nn::Var ratio = tape.exp(tape.sub(lp, tape.constant(nn::Mat::Constant(1, 1, f.old_log_prob))));
    nn::Var surr = tape.scale(ratio, adv[i]);
    if (!unclipped) surr = tape.minimum(surr, tape.scale(tape.clamp(ratio, 1.0 - eps, 1.0 + eps), adv[i]));
    terms.push_back(surr);
  }
  return tape.scale(tape.mean(tape.concat_rows(terms)), -1.0);
}

nn::Var value_loss(nn::Tape& tape, nn::CriticNet& critic, std::span<const Frame* const> frames,
                   std::span<const double> targets) {
  if (frames.empty() || frames.size() != targets.size()) throw UsageError("value_loss: bad batch");
  std::vector<nn::Var> vs;
  vs.reserve(frames.size());
  nn::Mat t(static_cast<Eigen::Index>(frames.size()), 1);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    vs.push_back(critic.value(tape, frames[i]->state));
    t(static_cast<Eigen::Index>(i), 0) = targets[i];
  }
  return tape.mean(tape.square(tape.sub(tape.concat_rows(vs), tape.constant(std::move(t)))));
}

UpdateStats ppo_update(policy::ActorModel& actor, nn::CriticNet& critic, const RolloutBuffer& buffer,
                       const PpoConfig& config, double gamma, nn::Adam& actor_opt, nn::Adam& critic_opt, Rng& rng) {
  if (buffer.frames.empty()) throw UsageError("ppo_update on an empty buffer");
  std::vector<double> adv =
      config.use_returns ? discounted_returns(buffer, gamma) : advantages(buffer, critic, gamma);
  if (config.normalize_advantages) normalize(adv);
  const std::vector<double> targets = value_targets(buffer, critic, gamma);
  const double eps = config.clip_epsilon;

  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.minibatch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.minibatch_size));
      std::vector<const Frame*> frames;
      std::vector<double> a;
      std::vector<double> t;
      for (std::size_t i = start; i < end; ++i) {
        frames.push_back(&buffer.frames[order[i]]);
        a.push_back(adv[order[i]]);
        t.push_back(targets[order[i]]);
      }
      {
        actor.params().zero_grad();
        nn::Tape tape;
        nn::Var loss = ppo_actor_loss(tape, actor, frames, a, eps, config.unclipped);
        stats.actor_loss = tape.scalar(loss);
        if (!std::isfinite(stats.actor_loss)) throw DivergenceError("actor loss is non-finite");
        tape.backward(loss);
        actor_opt.step();
      }
      {
        critic.params().zero_grad();
        nn::Tape tape;
        nn::Var loss = value_loss(tape, critic, frames, t);
        stats.critic_loss = tape.scalar(loss);
        if (!std::isfinite(stats.critic_loss)) throw DivergenceError("critic loss is non-finite");
        tape.backward(loss);
        critic_opt.step();
      }
      ++stats.steps;
    }
  }
  actor.params().zero_grad();
  critic.params().zero_grad();
  return stats;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  // Shortest round-trip decimal form of each double.
  auto num = [](double x) { return nlohmann::json(x).dump(); };
  std::ostringstream out;
  out << "frame,success_rate,avg_turns,avg_reward,seed\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << num(r.success_rate) << ',' << num(r.avg_turns) << ',' << num(r.avg_reward) << ','
        << r.seed << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << metrics_csv(rows);
}

PpoResult train_ppo(policy::ActorModel& actor, nn::CriticNet& critic, const UserSimulator& sim,
                    const PpoConfig& config, const std::function<void(const MetricsRow&)>& on_eval) {
  config.validate();
  nn::Adam actor_opt(actor.params(), {.lr = config.actor_lr, .clip_norm = config.clip_norm});
  nn::Adam critic_opt(critic.params(), {.lr = config.critic_lr, .clip_norm = config.clip_norm});
  Rng rng(config.seed);
  PpoResult result;

  auto record = [&] {
    const auto report = eval::evaluate(actor, sim, config.eval_episodes, config.eval_seed);
    MetricsRow row{result.frames, report.success_rate, report.avg_turns, report.avg_reward, config.seed};
    result.metrics.push_back(row);
    if (on_eval) on_eval(row);
  };

  record();
  long next_eval = config.eval_interval > 0 ? config.eval_interval : std::numeric_limits<long>::max();
  while (result.frames < config.total_frames) {
    const long want = std::min<long>(config.batch_frames, config.total_frames - result.frames);
    RolloutBuffer buf = collect(actor, critic, sim, want, config.reward_shaping, rng);
    ppo_update(actor, critic, buf, config, sim.config().gamma, actor_opt, critic_opt, rng);
    result.frames += static_cast<long>(buf.size());
    ++result.updates;
    if (result.frames >= next_eval && result.frames < config.total_frames) {
      record();
      while (next_eval <= result.frames) next_eval += config.eval_interval;
    }
  }
  record();
  return result;
}

}  // namespace dialogen::train
