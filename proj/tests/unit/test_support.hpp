#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dialogen/core/schema.hpp"
#include "dialogen/db/database.hpp"

namespace dialogen::testing {

inline std::filesystem::path data_dir() { return DIALOGEN_DATA_DIR; }
inline std::filesystem::path golden_dir() { return DIALOGEN_GOLDEN_DIR; }

inline const Schema& toy_schema() {
  static const Schema s = Schema::load(data_dir() / "toy_schema.json");
  return s;
}

inline const Database& toy_db() {
  static const Database db = load_database(data_dir() / "toy_db.json", toy_schema());
  return db;
}

// Hotel plus two single-slot-family domains used by the worked examples.
inline Schema travel_schema() {
  return Schema::from_json(nlohmann::json::parse(R"({
    "domains": ["hotel", "flight", "train"],
    "intents": ["inform", "request", "bye"],
    "slots": {
      "hotel": {"price": ["cheap", "expensive"], "area": ["north", "south"], "name": ["city inn", "worth house"]},
      "flight": {"time": ["9am", "noon"], "destination": ["seattle", "boston"]},
      "train": {"depart": ["london kings cross", "cambridge"], "id": ["tr1", "tr2"]}
    },
    "requestable": {"hotel": ["name"], "flight": ["time"], "train": ["id"]},
    "informable": {"hotel": ["price", "area"], "flight": ["destination"], "train": ["depart"]},
    "goal_slot_weights": {"hotel": {"price": 1.0, "name": 1.0}, "flight": {"destination": 1.0},
                          "train": {"depart": 1.0}}
  })"));
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares against tests/golden/<name>. With DIALOGEN_UPDATE_GOLDEN=1 set the
// file is rewritten instead.
inline void expect_golden(const std::string& name, const std::string& actual) {
  const auto path = golden_dir() / name;
  if (const char* u = std::getenv("DIALOGEN_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
  EXPECT_EQ(read_file(path), actual) << "golden mismatch: " << name;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dialogen_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace dialogen::testing
