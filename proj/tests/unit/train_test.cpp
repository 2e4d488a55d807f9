#include <gtest/gtest.h>

#include <cmath>

#include "dialogen/core/error.hpp"
#include "dialogen/train/corpus.hpp"
#include "dialogen/train/ppo.hpp"
#include "dialogen/train/warmup.hpp"
#include "test_support.hpp"

namespace dialogen::train {
namespace {

using testing::toy_db;
using testing::toy_schema;

nn::ModelConfig small() {
  nn::ModelConfig c;
  c.hidden_size = 16;
  c.heads = 2;
  c.ff_size = 32;
  c.max_decode_len = 12;
  c.max_text_len = 24;
  return c;
}

const UserSimulator& sim() {
  static const UserSimulator s(toy_schema(), toy_db());
  return s;
}

OraclePolicy oracle() { return OraclePolicy(toy_schema(), toy_db()); }

// --- corpus -----------------------------------------------------------------

TEST(Corpus, ZeroTurnsIsEmpty) { EXPECT_TRUE(generate_expert_data(sim(), oracle(), 0, 1).empty()); }

TEST(Corpus, SeededFirstRecordIsPinned) {
  const auto a = generate_expert_data(sim(), oracle(), 50, 0);
  ASSERT_EQ(a.size(), 50u);
  EXPECT_EQ(generate_expert_data(sim(), oracle(), 50, 0), a);
  testing::expect_golden("corpus_first_record.json", to_json(a.front()).dump(2) + "\n");
  for (const auto& r : a) {
    EXPECT_FALSE(r.user_act.empty());
    EXPECT_NO_THROW(validate_act(toy_schema(), r.target_act));
  }
}

TEST(Corpus, WriteReadRoundTrip) {
  const auto recs = generate_expert_data(sim(), oracle(), 40, 3);
  const auto dir = testing::fresh_dir("corpus");
  write_corpus(dir / "c.jsonl", recs);
  EXPECT_EQ(read_corpus(dir / "c.jsonl", toy_schema()), recs);
}

TEST(Corpus, ReadReportsLineNumber) {
  const auto recs = generate_expert_data(sim(), oracle(), 3, 3);
  const auto dir = testing::fresh_dir("corpus_bad");
  write_corpus(dir / "c.jsonl", recs);
  {
    std::ofstream out(dir / "c.jsonl", std::ios::app);
    auto j = to_json(recs.front());
    j["target_act"] = nlohmann::json::parse(R"([["hotel", "inform", "colour", "red"]])");
    out << j.dump() << '\n';
  }
  try {
    read_corpus(dir / "c.jsonl", toy_schema());
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("c.jsonl:4: "), std::string::npos) << e.what();
  }
}

// --- warm-up ----------------------------------------------------------------

TEST(Warmup, MemorizesSingleExample) {
  policy::WordActor actor(toy_schema(), small(), 1);
  const auto recs = generate_expert_data(sim(), oracle(), 1, 2);
  WarmupConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 150;
  cfg.patience = 150;
  const auto r = warmup(actor, recs, recs, cfg, 0);
  EXPECT_LT(r.best_valid_nll, 0.05);
  EXPECT_EQ(exact_match_accuracy(actor, toy_db(), recs), 1.0);
}

TEST(Warmup, PatienceRestoresBestEpoch) {
  policy::WordActor actor(toy_schema(), small(), 1);
  const auto train = generate_expert_data(sim(), oracle(), 64, 4);
  // Validation targets contradict the training targets, so validation NLL
  // worsens as training proceeds.
  auto valid = train;
  for (auto& r : valid) r.target_act = DialogueAct{{{"restaurant", "bye", "none", "none"}}};
  WarmupConfig cfg;
  cfg.lr = 3e-3;
  cfg.epochs = 30;
  cfg.patience = 3;
  const auto r = warmup(actor, train, valid, cfg, 0);
  ASSERT_LT(r.epochs_run, cfg.epochs);
  EXPECT_EQ(r.epochs_run, r.best_epoch + 1 + cfg.patience);
  EXPECT_EQ(r.best_valid_nll, *std::min_element(r.valid_nll.begin(), r.valid_nll.end()));
  EXPECT_LT(r.best_valid_nll, r.valid_nll.back());
  const auto ex = make_examples(actor, valid);
  EXPECT_DOUBLE_EQ(mean_nll(actor, ex), r.best_valid_nll);
}

TEST(Warmup, ConfigValidation) {
  WarmupConfig cfg;
  cfg.epochs = 3;
  EXPECT_THROW(cfg.validate(), ValidationError);
  nlohmann::json j = WarmupConfig{};
  j["momentum"] = 0.9;
  EXPECT_THROW(j.get<WarmupConfig>(), std::exception);
}

TEST(Warmup, NllIsMeanPerToken) {
  policy::WordActor actor(toy_schema(), small(), 2);
  const auto recs = generate_expert_data(sim(), oracle(), 5, 5);
  const auto ex = make_examples(actor, recs);
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& e : ex) {
    total -= actor.score(e.state, e.target);
    tokens += e.target.size();
  }
  std::vector<const SupervisedExample*> batch;
  for (const auto& e : ex) batch.push_back(&e);
  nn::Tape tape(false);
  EXPECT_NEAR(tape.scalar(nll_loss(tape, actor, batch)), total / static_cast<double>(tokens), 1e-12);
  EXPECT_NEAR(mean_nll(actor, ex), total / static_cast<double>(tokens), 1e-12);
}

// --- PPO pieces -------------------------------------------------------------

RolloutBuffer two_frames(double r0, double r1, bool done1) {
  RolloutBuffer b;
  const nn::Vocabulary v(toy_schema());
  for (int i = 0; i < 2; ++i) {
    Frame f;
    f.state = nn::encode_state(v, DialogueStateText{{i == 0 ? "hotel" : "restaurant"}, {}, {}, {}}, 24);
    f.action = {nn::Vocabulary::kEnd};
    f.reward = i == 0 ? r0 : r1;
    f.done = i == 1 && done1;
    if (!f.done) f.next_state = nn::encode_state(v, DialogueStateText{{"restaurant"}, {}, {}, {}}, 24);
    b.frames.push_back(f);
  }
  return b;
}

TEST(Advantages, ZeroCriticGivesReward) {
  const nn::CriticNet critic(small(), nn::Vocabulary(toy_schema()), 1);
  const auto b = two_frames(-1.0, 79.0, true);
  EXPECT_EQ(advantages(b, critic, 0.99), (std::vector<double>{-1.0, 79.0}));
}

TEST(Advantages, OneStepArithmetic) {
  // With a constant critic V = c everywhere: A = r + gamma * c - c, terminal A = r - c.
  nn::CriticNet critic(small(), nn::Vocabulary(toy_schema()), 1);
  critic.params().at("critic.head.b").value(0, 0) = 5.0;
  auto b = two_frames(-1.0, 2.0, true);
  const auto a = advantages(b, critic, 0.99);
  EXPECT_NEAR(a[0], -1.0 + 0.99 * 5.0 - 5.0, 1e-12);
  EXPECT_NEAR(a[1], 2.0 - 5.0, 1e-12);
}

TEST(Advantages, DistinctStateValues) {
  nn::CriticNet critic(small(), nn::Vocabulary(toy_schema()), 3);
  critic.params().at("critic.head.w").value.setConstant(0.7);
  const auto b = two_frames(-1.0, -1.0, false);
  const double v0 = critic.value(b.frames[0].state);
  const double v1 = critic.value(b.frames[1].state);
  ASSERT_NE(v0, v1);
  const auto a = advantages(b, critic, 0.99);
  EXPECT_NEAR(a[0], -1.0 + 0.99 * critic.value(*b.frames[0].next_state) - v0, 1e-12);
  const auto t = value_targets(b, critic, 0.99);
  EXPECT_NEAR(t[1], -1.0 + 0.99 * critic.value(*b.frames[1].next_state), 1e-12);
}

TEST(Returns, DiscountWithinEpisodes) {
  RolloutBuffer b = two_frames(-1.0, 79.0, true);
  const auto more = two_frames(-1.0, -41.0, true);
  b.frames.insert(b.frames.end(), more.frames.begin(), more.frames.end());
  const auto r = discounted_returns(b, 0.99);
  EXPECT_NEAR(r[0], -1.0 + 0.99 * 79.0, 1e-12);
  EXPECT_NEAR(r[1], 79.0, 1e-12);
  EXPECT_NEAR(r[2], -1.0 + 0.99 * -41.0, 1e-12);
  EXPECT_NEAR(r[3], -41.0, 1e-12);
}

TEST(Normalize, MeanZeroStdOne) {
  std::vector<double> x{1.0, 2.0, 3.0, 10.0};
  normalize(x);
  double m = 0.0;
  double s = 0.0;
  for (double v : x) m += v;
  for (double v : x) s += v * v;
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(s / 4.0, 1.0, 1e-12);
  std::vector<double> same{2.0, 2.0};
  normalize(same);
  EXPECT_EQ(same, (std::vector<double>{0.0, 0.0}));
}

TEST(ActorLoss, UnclippedIsNegativeRatioTimesAdvantage) {
  policy::WordActor actor(toy_schema(), small(), 7);
  auto b = two_frames(0, 0, true);
  for (auto& f : b.frames) f.old_log_prob = actor.score(f.state, f.action) + 0.3;
  std::vector<const Frame*> fs{&b.frames[0], &b.frames[1]};
  const std::vector<double> adv{2.0, -1.5};
  nn::Tape t(false);
  const double ratio = std::exp(-0.3);
  EXPECT_NEAR(t.scalar(ppo_actor_loss(t, actor, fs, adv, 0.2, true)), -(ratio * 2.0 + ratio * -1.5) / 2.0, 1e-12);
  // ratio 0.74 is clipped to 0.8 only where that lowers the objective.
  EXPECT_NEAR(t.scalar(ppo_actor_loss(t, actor, fs, adv, 0.2, false)), -(ratio * 2.0 + 0.8 * -1.5) / 2.0, 1e-12);
}

TEST(Collect, OneFrameRunsOneEpisode) {
  const policy::WordActor actor(toy_schema(), small(), 1);
  const nn::CriticNet critic(small(), actor.vocab(), 2);
  Rng rng(0);
  const auto b = collect(actor, critic, sim(), 1, true, rng);
  ASSERT_EQ(b.episodes.size(), 1u);
  ASSERT_GE(b.size(), 1u);
  EXPECT_EQ(static_cast<int>(b.size()), b.episodes[0].system_turns);
  EXPECT_TRUE(b.frames.back().done);
  double env = 0.0;
  for (const auto& f : b.frames) {
    env += f.env_reward;
    EXPECT_NEAR(f.old_log_prob, actor.score(f.state, f.action), 1e-9);
    EXPECT_EQ(f.done, !f.next_state.has_value());
  }
  EXPECT_EQ(env, b.episodes[0].env_return);
}

TEST(Collect, ShapingOffLeavesEnvReward) {
  const policy::WordActor actor(toy_schema(), small(), 1);
  const nn::CriticNet critic(small(), actor.vocab(), 2);
  Rng rng(0);
  const auto b = collect(actor, critic, sim(), 30, false, rng);
  for (const auto& f : b.frames) EXPECT_EQ(f.reward, f.env_reward);
}

TEST(TrainPpo, OneBatchIsOneUpdate) {
  policy::WordActor actor(toy_schema(), small(), 1);
  nn::CriticNet critic(small(), actor.vocab(), 2);
  PpoConfig cfg;
  cfg.total_frames = 40;
  cfg.batch_frames = 40;
  cfg.eval_episodes = 3;
  cfg.eval_interval = 0;
  int evals = 0;
  const auto r = train_ppo(actor, critic, sim(), cfg, [&](const MetricsRow&) { ++evals; });
  EXPECT_EQ(r.updates, 1);
  EXPECT_GE(r.frames, 40);
  EXPECT_EQ(r.metrics.size(), 2u);
  EXPECT_EQ(evals, 2);
  EXPECT_EQ(r.metrics.front().frame, 0);
  EXPECT_EQ(r.metrics.back().frame, r.frames);
}

TEST(TrainPpo, SameSeedSameMetrics) {
  auto run = [] {
    policy::WordActor actor(toy_schema(), small(), 1);
    nn::CriticNet critic(small(), actor.vocab(), 2);
    PpoConfig cfg;
    cfg.actor_lr = 1e-3;
    cfg.total_frames = 60;
    cfg.batch_frames = 30;
    cfg.eval_episodes = 4;
    cfg.eval_interval = 30;
    return metrics_csv(train_ppo(actor, critic, sim(), cfg).metrics);
  };
  EXPECT_EQ(run(), run());
}

TEST(Metrics, CsvFormat) {
  const MetricsRow rows[] = {{0, 0.51, 14.2, 33.995, 2}, {512, 1.0, 6.0, 70.0, 2}};
  EXPECT_EQ(metrics_csv(rows),
            "frame,success_rate,avg_turns,avg_reward,seed\n0,0.51,14.2,33.995,2\n512,1.0,6.0,70.0,2\n");
}

TEST(PpoConfig, JsonAndValidation) {
  nlohmann::json j = PpoConfig{};
  EXPECT_EQ(j.at("clip_epsilon"), 0.2);
  EXPECT_EQ(j.get<PpoConfig>().total_frames, 50000);
  j["clip_epsilon"] = 1.5;
  EXPECT_THROW(j.get<PpoConfig>(), ValidationError);
  j["clip_epsilon"] = 0.2;
  j["gae"] = true;
  EXPECT_THROW(j.get<PpoConfig>(), ValidationError);
}

}  // namespace
}  // namespace dialogen::train
