#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dialogen/core/error.hpp"
#include "dialogen/core/linearize.hpp"
#include "dialogen/neural/checkpoint.hpp"
#include "dialogen/neural/model.hpp"
#include "dialogen/neural/optimizer.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

namespace dialogen::nn {
namespace {

using testing::check_gradients;
using testing::toy_schema;

Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Reduces any output to a scalar with fixed random weights so that every
// entry of the upstream gradient differs.
Var weighted_sum(Tape& t, Var x, std::uint64_t seed) {
  const Mat& v = t.value(x);
  return t.sum(t.mul(x, t.constant(random_mat(v.rows(), v.cols(), seed))));
}

class OpGradients : public ::testing::Test {
 protected:
  void SetUp() override {
    store.add("a", random_mat(3, 4, 1));
    store.add("b", random_mat(4, 3, 2));
    store.add("c", random_mat(3, 4, 3));
    store.add("row", random_mat(1, 4, 4));
    store.add("gain", random_mat(1, 4, 5));
  }
  Var P(Tape& t, const char* n) { return t.param(store.at(n)); }
  void expect_ok(const std::function<Var(Tape&)>& f) {
    const auto r = check_gradients(store, f);
    EXPECT_LT(r.max_rel, 1e-6) << r.worst;
  }
  ParamStore store;
};

TEST_F(OpGradients, Elementwise) {
  expect_ok([&](Tape& t) { return weighted_sum(t, t.add(P(t, "a"), P(t, "c")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.sub(P(t, "a"), P(t, "c")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.mul(P(t, "a"), P(t, "c")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.scale(P(t, "a"), -2.5), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.exp(P(t, "a")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.square(P(t, "a")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.gelu(P(t, "a")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.add_row(P(t, "a"), P(t, "row")), 9); });
}

TEST_F(OpGradients, MatmulAndReductions) {
  expect_ok([&](Tape& t) { return weighted_sum(t, t.matmul(P(t, "a"), P(t, "b")), 9); });
  expect_ok([&](Tape& t) { return t.mean(t.square(P(t, "a"))); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.mean_rows(P(t, "a")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.row(P(t, "a"), 1), 9); });
  expect_ok([&](Tape& t) {
    const Var parts[] = {P(t, "a"), P(t, "row"), P(t, "c")};
    return weighted_sum(t, t.concat_rows(parts), 9);
  });
}

TEST_F(OpGradients, IndexingAndSoftmax) {
  const int ids[] = {2, 0, 2, 1};
  expect_ok([&](Tape& t) { return weighted_sum(t, t.gather_rows(P(t, "b"), ids), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.log_softmax_rows(P(t, "a")), 9); });
  const int cols[] = {3, 0, 1};
  expect_ok([&](Tape& t) { return t.sum(t.pick(t.log_softmax_rows(P(t, "a")), cols)); });
}

TEST_F(OpGradients, LayerNorm) {
  store.add("bias", random_mat(1, 4, 6));
  expect_ok([&](Tape& t) { return weighted_sum(t, t.layer_norm(P(t, "a"), P(t, "gain"), P(t, "bias")), 9); });
}

TEST_F(OpGradients, Attention) {
  store.add("q", random_mat(3, 4, 7));
  store.add("k", random_mat(5, 4, 8));
  store.add("v", random_mat(5, 4, 10));
  store.add("ks", random_mat(3, 4, 11));
  store.add("vs", random_mat(3, 4, 12));
  expect_ok([&](Tape& t) { return weighted_sum(t, t.attention(P(t, "q"), P(t, "k"), P(t, "v"), 2, false), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.attention(P(t, "q"), P(t, "ks"), P(t, "vs"), 1, true), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.attention(P(t, "q"), P(t, "ks"), P(t, "vs"), 2, true), 9); });
}

TEST_F(OpGradients, MinimumAndClampAwayFromKinks) {
  store.at("a").value << 0.5, 1.5, -0.3, 2.0, 0.9, 1.1, 0.1, -2.0, 1.3, 0.7, 0.2, 0.95;
  store.at("c").value << 0.6, 1.2, -0.5, 1.0, 1.0, 1.3, 0.4, -1.0, 1.0, 0.5, 0.3, 0.9;
  expect_ok([&](Tape& t) { return weighted_sum(t, t.minimum(P(t, "a"), P(t, "c")), 9); });
  expect_ok([&](Tape& t) { return weighted_sum(t, t.clamp(P(t, "a"), 0.8, 1.2), 9); });
}

TEST(Tape, CausalAttentionHidesFuture) {
  Tape t(false);
  Mat q = random_mat(3, 2, 1);
  Mat k = random_mat(3, 2, 2);
  Mat v = random_mat(3, 2, 3);
  const Mat a = t.value(t.attention(t.constant(q), t.constant(k), t.constant(v), 1, true));
  v.row(2).setConstant(100.0);
  const Mat b = t.value(t.attention(t.constant(q), t.constant(k), t.constant(v), 1, true));
  EXPECT_TRUE(a.topRows(2).isApprox(b.topRows(2), 0.0));
  EXPECT_FALSE(a.row(2).isApprox(b.row(2)));
}

TEST(Tape, BackwardOnceAndNeedsRecording) {
  ParamStore s;
  s.add("w", Mat::Constant(1, 1, 3.0));
  s.zero_grad();
  Tape t;
  Var l = t.square(t.param(s.at("w")));
  t.backward(l);
  EXPECT_DOUBLE_EQ(s.at("w").grad(0, 0), 6.0);
  EXPECT_THROW(t.backward(l), UsageError);
  Tape off(false);
  EXPECT_THROW(off.backward(off.square(off.param(s.at("w")))), UsageError);
  Tape m;
  EXPECT_THROW(m.backward(m.constant(Mat::Ones(2, 2))), UsageError);
}

TEST(Tape, ParamGradientsAccumulateAcrossUses) {
  ParamStore s;
  s.add("w", Mat::Constant(1, 1, 2.0));
  s.zero_grad();
  Tape t;
  Var w = t.param(s.at("w"));
  t.backward(t.mul(w, t.param(s.at("w"))));
  EXPECT_DOUBLE_EQ(s.at("w").grad(0, 0), 4.0);
}

TEST(ParamStore, NonFiniteGradientNamesParameter) {
  ParamStore s;
  s.add("enc.w", Mat::Ones(2, 2));
  s.zero_grad();
  s.at("enc.w").grad(1, 0) = std::nan("");
  try {
    s.check_finite_grads();
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("enc.w"), std::string::npos);
  }
  EXPECT_THROW(s.add("enc.w", Mat::Ones(1, 1)), UsageError);
}

TEST(Adam, MinimizesQuadraticAndRejectsNan) {
  ParamStore s;
  s.add("x", Mat::Constant(1, 3, 5.0));
  Adam opt(s, {.lr = 0.1, .clip_norm = 0.0});
  for (int i = 0; i < 500; ++i) {
    s.zero_grad();
    Tape t;
    t.backward(t.sum(t.square(t.param(s.at("x")))));
    opt.step();
  }
  EXPECT_LT(s.at("x").value.cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_EQ(opt.steps(), 500);

  const Mat before = s.at("x").value;
  s.at("x").grad.setConstant(std::numeric_limits<double>::infinity());
  EXPECT_THROW(opt.step(), DivergenceError);
  EXPECT_EQ(s.at("x").value, before);
}

TEST(Adam, FirstStepMovesEachCoordinateByLr) {
  ParamStore s;
  s.add("x", Mat::Zero(1, 2));
  Adam opt(s, {.lr = 0.01, .clip_norm = 0.0});
  s.at("x").grad << 3.0, -0.5;
  const double norm = opt.step();
  EXPECT_NEAR(norm, std::sqrt(9.25), 1e-12);
  EXPECT_NEAR(s.at("x").value(0, 0), -0.01, 1e-9);
  EXPECT_NEAR(s.at("x").value(0, 1), 0.01, 1e-9);
}

TEST(Adam, ClipsGlobalNorm) {
  ParamStore a;
  a.add("x", Mat::Zero(1, 2));
  ParamStore b = a;
  Adam clipped(a, {.lr = 0.01, .clip_norm = 1.0});
  Adam plain(b, {.lr = 0.01, .clip_norm = 0.0});
  a.at("x").grad << 30.0, 40.0;
  b.at("x").grad << 0.6, 0.8;
  EXPECT_NEAR(clipped.step(), 50.0, 1e-12);
  plain.step();
  EXPECT_TRUE(a.at("x").value.isApprox(b.at("x").value, 1e-12));
}

// --- models -----------------------------------------------------------------

ModelConfig tiny() {
  ModelConfig c;
  c.hidden_size = 8;
  c.heads = 2;
  c.ff_size = 16;
  c.max_decode_len = 10;
  c.max_text_len = 12;
  return c;
}

EncodedState sample_state(const Vocabulary& v, int max_len) {
  const auto text = build_state_text(toy_schema(), DialogueAct{{{"hotel", "inform", "area", "north"},
                                                                {"hotel", "request", "phone", "?"}}},
                                     DialogueAct{}, BeliefState{{{"hotel", "area", "north"}}},
                                     DbResultSummary{{{"hotel", 5}}});
  return encode_state(v, text, max_len);
}

TEST(EncodeState, PrefixesClassifierAndTruncates) {
  const Vocabulary v(toy_schema());
  DialogueStateText t;
  t.belief = {"hotel", "name", "the", "cambridge", "belfry"};
  const auto e = encode_state(v, t, 4);
  EXPECT_EQ(e.texts[0], (std::vector<int>{Vocabulary::kCls}));
  EXPECT_EQ(e.texts[2], (std::vector<int>{Vocabulary::kCls, v.id("hotel"), v.id("name"), v.id("the")}));
}

TEST(Vocabulary, SpecialsFirstAndUnknownMapping) {
  const Vocabulary v(toy_schema());
  EXPECT_EQ(v.token(Vocabulary::kCls), "[cls]");
  EXPECT_EQ(v.token(Vocabulary::kEnd), "[end]");
  EXPECT_EQ(v.id("no-such-token"), Vocabulary::kUnk);
  EXPECT_EQ(v.size(), 5 + static_cast<int>(toy_schema().tokens().size()));
  EXPECT_THROW(v.token(v.size()), UsageError);
  EXPECT_THROW(Vocabulary(std::vector<std::string>{"a"}), ValidationError);
}

TEST(ActorNet, EmptyTextsGiveDistinctRows) {
  const Vocabulary v(toy_schema());
  const ActorNet net(tiny(), v, 1);
  const auto e = encode_state(v, DialogueStateText{}, 12);
  Tape t(false);
  const Mat s = t.value(net.encode(t, e));
  ASSERT_EQ(s.rows(), 4);
  ASSERT_EQ(s.cols(), 8);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) EXPECT_GT((s.row(i) - s.row(j)).norm(), 1e-6);
  }
}

TEST(ActorNet, SeededConstructionIsBitIdentical) {
  const Vocabulary v(toy_schema());
  const ActorNet a(tiny(), v, 5);
  const ActorNet b(tiny(), v, 5);
  const auto e = sample_state(v, 12);
  Tape ta(false);
  Tape tb(false);
  EXPECT_EQ(ta.value(a.encode(ta, e)), tb.value(b.encode(tb, e)));
  const ActorNet c(tiny(), v, 6);
  Tape tc(false);
  EXPECT_NE(ta.value(a.encode(ta, e)), tc.value(c.encode(tc, e)));
}

TEST(ActorNet, SoftmaxRowsSumToOne) {
  const Vocabulary v(toy_schema());
  const ActorNet net(tiny(), v, 2);
  Tape t(false);
  const int inputs[] = {Vocabulary::kStart, v.id("hotel"), v.id("inform"), v.id("area")};
  const Mat lp = t.value(net.decoder_log_probs(t, net.memory(t, net.encode(t, sample_state(v, 12))), inputs));
  ASSERT_EQ(lp.rows(), 4);
  ASSERT_EQ(lp.cols(), v.size());
  for (Eigen::Index r = 0; r < lp.rows(); ++r) EXPECT_NEAR(lp.row(r).array().exp().sum(), 1.0, 1e-12);
}

TEST(ActorNet, ZeroLogitsGiveUniformScore) {
  const Vocabulary v(toy_schema());
  ActorNet net(tiny(), v, 3);
  net.set_zero_logits(true);
  const int target[] = {v.id("hotel"), v.id("inform"), Vocabulary::kEnd};
  EXPECT_NEAR(net.score(sample_state(v, 12), target), -3.0 * std::log(static_cast<double>(v.size())), 1e-12);
}

TEST(ActorNet, SampledLogProbMatchesScore) {
  const Vocabulary v(toy_schema());
  const ActorNet net(tiny(), v, 4);
  const auto e = sample_state(v, 12);
  std::mt19937_64 rng(9);
  int truncated = 0;
  for (int i = 0; i < 50; ++i) {
    const auto s = net.sample(e, rng, DecodeMode::kSample);
    ASSERT_FALSE(s.tokens.empty());
    ASSERT_LE(static_cast<int>(s.tokens.size()), 10);
    truncated += s.truncated;
    if (!s.truncated) ASSERT_EQ(s.tokens.back(), Vocabulary::kEnd);
    EXPECT_NEAR(net.score(e, s.tokens), s.log_prob, 1e-9);
  }
  EXPECT_GT(truncated, 0);
  const auto g = net.sample(e, rng, DecodeMode::kGreedy);
  EXPECT_EQ(net.sample(e, rng, DecodeMode::kGreedy).tokens, g.tokens);
  EXPECT_NEAR(net.score(e, g.tokens), g.log_prob, 1e-9);
}

TEST(ActorNet, TargetLengthAndIdsChecked) {
  const Vocabulary v(toy_schema());
  const ActorNet net(tiny(), v, 4);
  const auto e = sample_state(v, 12);
  const std::vector<int> too_long(11, v.id("hotel"));
  EXPECT_THROW(net.score(e, too_long), UsageError);
  EXPECT_THROW(net.score(e, std::vector<int>{}), UsageError);
  EXPECT_THROW(net.score(e, std::vector<int>{v.size()}), UsageError);
}

TEST(ActorNet, GradientsMatchFiniteDifferences) {
  const Vocabulary v(toy_schema());
  ModelConfig c = tiny();
  c.hidden_size = 4;
  c.ff_size = 8;
  ActorNet net(c, v, 7);
  const auto e = sample_state(v, 12);
  const int target[] = {v.id("hotel"), v.id("inform"), v.id("phone"), Vocabulary::kEnd};
  const auto r = check_gradients(net.params(), [&](Tape& t) { return t.sum(net.token_log_probs(t, e, target)); });
  EXPECT_LT(r.max_rel, 1e-5) << r.worst;
  EXPECT_EQ(r.checked, net.params().count());
}

TEST(CriticNet, ZeroHeadGivesBiasEverywhere) {
  const Vocabulary v(toy_schema());
  CriticNet critic(tiny(), v, 1);
  EXPECT_EQ(critic.value(sample_state(v, 12)), 0.0);
  critic.params().at("critic.head.b").value(0, 0) = 1.5;
  EXPECT_EQ(critic.value(sample_state(v, 12)), 1.5);
  EXPECT_EQ(critic.value(encode_state(v, DialogueStateText{}, 12)), 1.5);
}

TEST(CriticNet, GradientsMatchFiniteDifferences) {
  const Vocabulary v(toy_schema());
  ModelConfig c = tiny();
  c.hidden_size = 4;
  c.ff_size = 8;
  CriticNet critic(c, v, 3);
  critic.params().at("critic.head.w").value = random_mat(4, 1, 8);
  const auto e = sample_state(v, 12);
  const auto r = check_gradients(critic.params(), [&](Tape& t) { return t.square(critic.value(t, e)); });
  EXPECT_LT(r.max_rel, 1e-5) << r.worst;
}

TEST(CandidateNet, LogProbsNormalized) {
  const Vocabulary v(toy_schema());
  const CandidateNet net(tiny(), v, 7, 1);
  Tape t(false);
  const Mat lp = t.value(net.log_probs(t, sample_state(v, 12)));
  ASSERT_EQ(lp.cols(), 7);
  EXPECT_NEAR(lp.array().exp().sum(), 1.0, 1e-12);
  EXPECT_THROW(CandidateNet(tiny(), v, 0, 1), ValidationError);
}

TEST(ModelConfig, ValidationAndJson) {
  ModelConfig c;
  c.heads = 3;
  EXPECT_THROW(c.validate(), ValidationError);
  nlohmann::json j = tiny();
  EXPECT_EQ(j.at("hidden_size"), 8);
  const ModelConfig back = j.get<ModelConfig>();
  EXPECT_EQ(back.ff(), 16);
  j["dropout"] = 1;
  EXPECT_THROW(j.get<ModelConfig>(), ValidationError);
}

TEST(ModelConfig, ReferenceSizeIsNearFiveMillion) {
  const Vocabulary v(toy_schema());
  const ActorNet a(ModelConfig{}, v, 0);
  const CriticNet c(ModelConfig{}, v, 0);
  const double total = static_cast<double>(a.params().count() + c.params().count());
  EXPECT_NEAR(total, 5e6, 1e6);
}

TEST(Checkpoint, RoundTripIsExact) {
  const Vocabulary v(toy_schema());
  const ActorNet a(tiny(), v, 1);
  const CriticNet c(tiny(), v, 2);
  const auto dir = testing::fresh_dir("ckpt");
  const ParamStore* stores[] = {&a.params(), &c.params()};
  save_checkpoint(dir / "x.ckpt", {{"note", "hi"}}, stores);
  const auto file = read_checkpoint(dir / "x.ckpt");
  EXPECT_EQ(file.header.at("note"), "hi");
  EXPECT_EQ(file.arrays.size(), a.params().size() + c.params().size());

  ActorNet b(tiny(), v, 99);
  restore_params(b.params(), file);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i].value, b.params()[i].value);
  EXPECT_EQ(testing::read_file(dir / "x.ckpt").substr(0, 8), "DLGCKPT1");
}

TEST(Checkpoint, RejectsCorruptionAndShapeMismatch) {
  const Vocabulary v(toy_schema());
  const ActorNet a(tiny(), v, 1);
  const auto dir = testing::fresh_dir("ckpt_bad");
  const ParamStore* stores[] = {&a.params()};
  save_checkpoint(dir / "a.ckpt", {}, stores);

  std::string bytes = testing::read_file(dir / "a.ckpt");
  bytes[0] = 'X';
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << bytes;
  EXPECT_THROW(read_checkpoint(dir / "bad.ckpt"), ParseError);

  std::ofstream(dir / "short.ckpt", std::ios::binary) << testing::read_file(dir / "a.ckpt").substr(0, 20);
  EXPECT_THROW(read_checkpoint(dir / "short.ckpt"), ParseError);

  ModelConfig wide = tiny();
  wide.hidden_size = 16;
  ActorNet w(wide, v, 1);
  EXPECT_THROW(restore_params(w.params(), read_checkpoint(dir / "a.ckpt")), ValidationError);
  CriticNet critic(tiny(), v, 1);
  EXPECT_THROW(restore_params(critic.params(), read_checkpoint(dir / "a.ckpt")), ValidationError);
}

}  // namespace
}  // namespace dialogen::nn
