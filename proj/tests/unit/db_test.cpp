#include <gtest/gtest.h>

#include "dialogen/core/error.hpp"
#include "dialogen/db/database.hpp"
#include "test_support.hpp"

namespace dialogen {
namespace {

using testing::toy_db;
using testing::toy_schema;

TEST(Database, EmptyArray) {
  const Database db = Database::from_json(toy_schema(), nlohmann::json::array());
  EXPECT_EQ(db.size(), 0u);
  EXPECT_TRUE(db.query("hotel", {}).empty());
}

TEST(Database, ToyFixtureCounts) {
  EXPECT_EQ(toy_db().size(), 14u);
  EXPECT_EQ(toy_db().entities("hotel").size(), 8u);
  EXPECT_EQ(toy_db().entities("restaurant").size(), 6u);
  EXPECT_EQ(toy_db().domains(), (std::vector<std::string>{"hotel", "restaurant"}));
}

TEST(Database, OutOfVocabularyValueNamesSlot) {
  auto j = nlohmann::json::parse(R"([{"domain": "hotel", "values": {"area": "north", "stars": "7"}}])");
  try {
    Database::from_json(toy_schema(), j);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("stars"), std::string::npos);
  }
  auto k = nlohmann::json::parse(R"([{"domain": "hotel", "values": {}, "rating": 3}])");
  EXPECT_THROW(Database::from_json(toy_schema(), k), ParseError);
}

TEST(Database, MissingFile) {
  EXPECT_THROW(load_database("/nonexistent/db.json", toy_schema()), ParseError);
}

TEST(Query, EmptyConstraintsReturnDomain) {
  const auto all = toy_db().query("hotel", {});
  ASSERT_EQ(all.size(), 8u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(&all[i].get(), &toy_db().entities("hotel")[i]);
}

TEST(Query, MatchesBruteForceScan) {
  const Schema& s = toy_schema();
  for (const auto& d : s.domains()) {
    for (const auto& area : s.domain(d).slots.at("area")) {
      for (const auto& price : s.domain(d).slots.at("price")) {
        const std::map<std::string, std::string> c{{"area", area}, {"price", price}};
        std::vector<const Entity*> expected;
        for (const auto& e : toy_db().entities(d)) {
          auto a = e.values.find("area");
          auto p = e.values.find("price");
          if (a != e.values.end() && a->second == area && p != e.values.end() && p->second == price) {
            expected.push_back(&e);
          }
        }
        const auto got = toy_db().query(d, c);
        ASSERT_EQ(got.size(), expected.size()) << d << ' ' << area << ' ' << price;
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(&got[i].get(), expected[i]);
      }
    }
  }
  EXPECT_EQ(toy_db().query("hotel", {{"price", "expensive"}, {"area", "north"}}).size(), 2u);
}

TEST(Query, UnsatisfiableAndUnknownDomain) {
  EXPECT_TRUE(toy_db().query("hotel", {{"area", "south"}}).empty());
  EXPECT_TRUE(toy_db().query("taxi", {}).empty());
}

TEST(MatchCounts, FollowsBeliefDomains) {
  EXPECT_TRUE(match_counts(toy_db(), {}).counts.empty());
  BeliefState b{{{"hotel", "area", "north"}, {"restaurant", "price", "expensive"}}};
  EXPECT_EQ(match_counts(toy_db(), b), (DbResultSummary{{{"hotel", 5}, {"restaurant", 3}}}));
  BeliefState r{{{"restaurant", "area", "centre"}, {"restaurant", "price", "expensive"}}};
  EXPECT_EQ(match_counts(toy_db(), r), (DbResultSummary{{{"restaurant", 2}}}));
}

TEST(MatchCounts, OneDomainAgreesWithCountOracle) {
  const Schema& s = toy_schema();
  for (const auto& food : s.domain("restaurant").slots.at("food")) {
    BeliefState b{{{"restaurant", "food", food}}};
    int expected = 0;
    for (const auto& e : toy_db().entities("restaurant")) expected += e.values.at("food") == food;
    EXPECT_EQ(match_counts(toy_db(), b), (DbResultSummary{{{"restaurant", expected}}}));
  }
}

}  // namespace
}  // namespace dialogen
