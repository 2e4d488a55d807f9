#include <gtest/gtest.h>

#include "dialogen/core/error.hpp"
#include "dialogen/policy/policy.hpp"
#include "test_support.hpp"

namespace dialogen::policy {
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

Observation opening() {
  Observation o;
  o.user_act = DialogueAct{{{"hotel", "inform", "area", "north"}, {"hotel", "request", "name", "?"}}};
  track_belief(o.belief, o.user_act);
  o.db = match_counts(toy_db(), o.belief);
  return o;
}

TEST(WordActor, TargetEncodesLinearizedAct) {
  const WordActor actor(toy_schema(), small(), 1);
  const auto t = actor.target(DialogueAct{{{"hotel", "inform", "name", "x"}}});
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(actor.surface(*t), (std::vector<std::string>{"hotel", "inform", "name", "[end]"}));

  DialogueAct big;
  for (const char* s : {"name", "phone", "address", "postcode"}) big.quads.push_back({"hotel", "inform", s, "x"});
  EXPECT_FALSE(actor.target(big).has_value());
}

TEST(WordActor, RejectsForeignVocabulary) {
  auto j = toy_schema().to_json();
  j["slots"]["hotel"]["area"].push_back("far away");
  const Schema other = Schema::from_json(j);
  nn::ActorNet net(small(), nn::Vocabulary(other), 1);
  EXPECT_THROW(WordActor(toy_schema(), net), ValidationError);
  EXPECT_NO_THROW(WordActor(other, net));
}

TEST(WordActor, InterpretParsesSurface) {
  const WordActor actor(toy_schema(), small(), 1);
  const auto& v = actor.vocab();
  const std::vector<int> a{v.id("hotel"), v.id("inform"), v.id("name"), v.id("inform"), nn::Vocabulary::kEnd};
  const auto r = actor.interpret(a);
  EXPECT_EQ(r.triplets, (std::vector<AtomicAct>{{"hotel", "inform", "name"}}));
  EXPECT_EQ(r.discarded.size(), 1u);
  EXPECT_TRUE(r.terminated_by_end);
}

TEST(PolicyAct, DecisionIsConsistent) {
  const WordActor actor(toy_schema(), small(), 3);
  const Observation obs = opening();
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto d = act(actor, toy_db(), obs, rng, DecodeMode::kSample);
    EXPECT_EQ(d.state, build_state_text(toy_schema(), obs.user_act, obs.last_system_act, obs.belief, obs.db));
    EXPECT_EQ(d.encoded, actor.encode(d.state));
    EXPECT_EQ(d.tokens, actor.surface(d.action));
    EXPECT_EQ(d.parse.triplets, parse_act_text(d.tokens, toy_schema()).triplets);
    EXPECT_EQ(d.act, populate_values(d.parse.triplets, toy_db(), obs.belief));
    EXPECT_NEAR(d.log_prob, actor.score(d.encoded, d.action), 1e-9);
    for (const auto& q : d.act.quads) EXPECT_NO_THROW(validate_triplet(toy_schema(), q.triplet()));
  }
}

TEST(PolicyAct, GreedyIsDeterministic) {
  const WordActor actor(toy_schema(), small(), 3);
  Rng a(1);
  Rng b(2);
  EXPECT_EQ(act(actor, toy_db(), opening(), a, DecodeMode::kGreedy).action,
            act(actor, toy_db(), opening(), b, DecodeMode::kGreedy).action);
}

TEST(PolicyScore, MatchesModelScoreAndIgnoresTail) {
  const WordActor actor(toy_schema(), small(), 3);
  const Observation obs = opening();
  const auto text = build_state_text(toy_schema(), obs.user_act, {}, obs.belief, obs.db);
  const std::vector<std::string> toks{"hotel", "inform", "name", "[end]"};
  const auto ids = actor.vocab().encode(toks);
  const double s = score(actor, text, toks);
  EXPECT_NEAR(s, actor.score(actor.encode(text), ids), 1e-12);
  EXPECT_LT(s, 0.0);
  EXPECT_EQ(score(actor, text, std::vector<std::string>{"hotel", "inform", "name", "[end]", "junk", "more"}), s);
  EXPECT_THROW(score(actor, text, std::vector<std::string>{"hotel", "inform"}), UsageError);
  EXPECT_THROW(score(actor, text, std::vector<std::string>{"spa", "[end]"}), ValidationError);
}

TEST(PolicyScore, SumsToOneOverShortActions) {
  // Every one-token action is "[end]" or a truncation-free prefix; the
  // probabilities of all first tokens sum to one.
  nn::ModelConfig c = small();
  c.max_decode_len = 1;
  const WordActor actor(toy_schema(), c, 4);
  const auto text = build_state_text(toy_schema(), opening().user_act, {}, {}, {});
  double total = 0.0;
  for (const auto& tok : actor.vocab().tokens()) total += std::exp(score(actor, text, std::vector<std::string>{tok}));
  EXPECT_NEAR(total, 1.0, 1e-9);
}

}  // namespace
}  // namespace dialogen::policy
