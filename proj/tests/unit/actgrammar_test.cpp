#include <gtest/gtest.h>

#include <random>

#include "dialogen/actgrammar/interpreter.hpp"
#include "dialogen/core/error.hpp"
#include "test_support.hpp"

namespace dialogen {
namespace {

using testing::toy_db;
using testing::toy_schema;

TokenSeq words(std::string_view s) { return split_whitespace(s); }

std::vector<std::size_t> positions(const ParseReport& r) {
  std::vector<std::size_t> out;
  for (const auto& d : r.discarded) out.push_back(d.position);
  return out;
}

TEST(ParseActText, WellFormedText) {
  const auto r = parse_act_text(words("hotel inform price hotel request name"), toy_schema());
  EXPECT_EQ(r.triplets, (std::vector<AtomicAct>{{"hotel", "inform", "price"}, {"hotel", "request", "name"}}));
  EXPECT_TRUE(r.discarded.empty());
  EXPECT_FALSE(r.terminated_by_end);
}

TEST(ParseActText, EmptyAndEndOnly) {
  EXPECT_TRUE(parse_act_text(TokenSeq{}, toy_schema()).triplets.empty());
  const auto r = parse_act_text(words("[end]"), toy_schema());
  EXPECT_TRUE(r.triplets.empty());
  EXPECT_TRUE(r.terminated_by_end);
}

TEST(ParseActText, SwappedIntentAndSlot) {
  const auto r = parse_act_text(words("hotel price inform"), toy_schema());
  EXPECT_TRUE(r.triplets.empty());
  const auto pos = positions(r);
  // "price" is not an intent; "inform" never completes a triplet.
  EXPECT_NE(std::find(pos.begin(), pos.end(), 1u), pos.end());
  EXPECT_NE(std::find(pos.begin(), pos.end(), 2u), pos.end());
}

TEST(ParseActText, DomainRestartsIncompleteTriplet) {
  const auto r = parse_act_text(words("hotel inform restaurant request food"), toy_schema());
  EXPECT_EQ(r.triplets, (std::vector<AtomicAct>{{"restaurant", "request", "food"}}));
  EXPECT_EQ(positions(r), (std::vector<std::size_t>{0, 1}));
}

TEST(ParseActText, DuplicatesKeptOnce) {
  const auto r = parse_act_text(words("hotel inform area hotel inform area hotel request phone"), toy_schema());
  EXPECT_EQ(r.triplets, (std::vector<AtomicAct>{{"hotel", "inform", "area"}, {"hotel", "request", "phone"}}));
  EXPECT_EQ(positions(r), (std::vector<std::size_t>{3, 4, 5}));
}

TEST(ParseActText, StopsAtEnd) {
  const auto r = parse_act_text(words("hotel inform area [end] hotel request phone"), toy_schema());
  EXPECT_EQ(r.triplets, (std::vector<AtomicAct>{{"hotel", "inform", "area"}}));
  EXPECT_TRUE(r.terminated_by_end);
}

TEST(ParseActText, SlotMustBelongToDomain) {
  const auto r = parse_act_text(words("hotel inform food"), toy_schema());
  EXPECT_TRUE(r.triplets.empty());
  EXPECT_EQ(positions(r), (std::vector<std::size_t>{0, 1, 2}));
}

// Every three-token sequence over the name alphabet: a triplet results exactly
// when the three tokens form a schema-valid triplet, and every other token is
// accounted for by a discard.
TEST(ParseActText, AgreesWithReferenceOnAllThreeTokenSequences) {
  const Schema& s = toy_schema();
  std::set<std::string> alpha(s.intents().begin(), s.intents().end());
  for (const auto& d : s.domains()) {
    alpha.insert(d);
    for (const auto& [slot, _] : s.domain(d).slots) alpha.insert(slot);
  }
  alpha.insert("north");
  alpha.insert("[unk]");
  const std::vector<std::string> a(alpha.begin(), alpha.end());
  long checked = 0;
  for (const auto& x : a) {
    for (const auto& y : a) {
      for (const auto& z : a) {
        const TokenSeq seq{x, y, z};
        const auto r = parse_act_text(seq, s);
        const bool valid = s.has_domain(x) && s.has_intent(y) && s.has_slot(x, z);
        if (valid) {
          ASSERT_EQ(r.triplets, (std::vector<AtomicAct>{{x, y, z}})) << x << ' ' << y << ' ' << z;
          ASSERT_TRUE(r.discarded.empty());
        } else {
          ASSERT_TRUE(r.triplets.empty()) << x << ' ' << y << ' ' << z;
          ASSERT_EQ(positions(r), (std::vector<std::size_t>{0, 1, 2})) << x << ' ' << y << ' ' << z;
        }
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, static_cast<long>(a.size() * a.size() * a.size()));
}

TEST(ParseActText, FuzzNeverYieldsInvalidTriplets) {
  const Schema& s = toy_schema();
  std::vector<std::string> pool = s.tokens();
  pool.emplace_back("[end]");
  pool.emplace_back("[unk]");
  pool.emplace_back("");
  pool.emplace_back("Hotel");
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> len(0, 20);
  for (int n = 0; n < 2000; ++n) {
    TokenSeq seq(static_cast<std::size_t>(len(rng)));
    for (auto& t : seq) t = pool[pick(rng)];
    const auto r = parse_act_text(seq, s);
    for (const auto& t : r.triplets) ASSERT_NO_THROW(validate_triplet(s, t));
    std::set<AtomicAct> uniq(r.triplets.begin(), r.triplets.end());
    ASSERT_EQ(uniq.size(), r.triplets.size());
  }
}

TEST(PopulateValues, RequestCarriesQuestionMark) {
  const auto act = populate_values(std::vector<AtomicAct>{{"hotel", "request", "area"}}, toy_db(), {});
  EXPECT_EQ(act.quads, (std::vector<ActQuad>{{"hotel", "request", "area", "?"}}));
}

TEST(PopulateValues, InformTakesFirstMatchingEntity) {
  BeliefState belief{{{"hotel", "price", "expensive"}}};
  const auto act = populate_values(std::vector<AtomicAct>{{"hotel", "inform", "name"}}, toy_db(), belief);
  std::string expected;
  for (const auto& e : toy_db().entities("hotel")) {
    if (e.values.at("price") == "expensive") {
      expected = e.values.at("name");
      break;
    }
  }
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(act.quads, (std::vector<ActQuad>{{"hotel", "inform", "name", expected}}));

  const auto price = populate_values(std::vector<AtomicAct>{{"hotel", "inform", "price"}}, toy_db(), belief);
  EXPECT_EQ(price.quads.front().value, "expensive");
}

TEST(PopulateValues, NoMatchGivesNone) {
  BeliefState belief{{{"hotel", "area", "south"}}};
  const auto act = populate_values(std::vector<AtomicAct>{{"hotel", "inform", "price"}}, toy_db(), belief);
  EXPECT_EQ(act.quads.front().value, "none");
  const auto bye = populate_values(std::vector<AtomicAct>{{"hotel", "bye", "none"}}, toy_db(), {});
  EXPECT_EQ(bye.quads.front().value, "none");
}

TEST(LinearizeTarget, AppendsEnd) {
  EXPECT_EQ(join_tokens(linearize_target(toy_schema(), DialogueAct{{{"hotel", "request", "name", "?"}}})),
            "hotel request name [end]");
  EXPECT_EQ(join_tokens(linearize_target(toy_schema(), DialogueAct{})), "[end]");
}

TEST(LinearizeTarget, SingleTripletRoundTripIsExhaustive) {
  const Schema& s = toy_schema();
  int n = 0;
  for (const auto& d : s.domains()) {
    for (const auto& i : s.intents()) {
      for (const auto& [slot, _] : s.domain(d).slots) {
        const std::string v = i == "request" ? "?" : "none";
        const DialogueAct act{{{d, i, slot, v}}};
        const auto r = parse_act_text(linearize_target(s, act), s);
        ASSERT_EQ(r.triplets, act.triplets());
        ASSERT_TRUE(r.discarded.empty());
        ASSERT_TRUE(r.terminated_by_end);
        ++n;
      }
    }
  }
  EXPECT_EQ(n, 3 * (9 + 11));
}

TEST(ParseBeliefText, MultiWordValues) {
  const Schema& s = toy_schema();
  BeliefState b{{{"hotel", "name", "the cambridge belfry"}, {"restaurant", "time", "18:00"},
                 {"restaurant", "name", "pizza hut city centre"}}};
  EXPECT_EQ(parse_belief_text(linearize_belief(s, b), s), b);
}

TEST(ParseDbText, BucketReadsBackAsTen) {
  const Schema& s = toy_schema();
  EXPECT_EQ(parse_db_text(words("hotel 10+ restaurant 0"), s), (DbResultSummary{{{"hotel", 10}, {"restaurant", 0}}}));
  EXPECT_THROW(parse_db_text(words("hotel"), s), ValidationError);
  EXPECT_THROW(parse_db_text(words("hotel many"), s), ValidationError);
}

}  // namespace
}  // namespace dialogen
