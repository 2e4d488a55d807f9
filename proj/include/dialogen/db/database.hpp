#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/core/schema.hpp"
#include "dialogen/core/types.hpp"

namespace dialogen {

struct Entity {
  std::string domain;
  std::map<std::string, std::string> values;

  // Slot value, or nullptr when the entity does not carry the slot.
  const std::string* get(const std::string& slot) const;
  bool operator==(const Entity&) const = default;
};

using EntityRefs = std::vector<std::reference_wrapper<const Entity>>;

// Immutable entity store. Entities keep their file order within each domain.
class Database {
 public:
  Database() = default;
  Database(const Schema& schema, std::vector<Entity> entities);

  static Database from_json(const Schema& schema, const nlohmann::json& j);

  // Exact-match filter; empty constraints return every entity of the domain.
  // An unknown domain yields an empty list.
  EntityRefs query(const std::string& domain, const std::map<std::string, std::string>& constraints) const;

  const std::vector<Entity>& entities(const std::string& domain) const;
  std::size_t size() const;
  std::vector<std::string> domains() const;

 private:
  std::map<std::string, std::vector<Entity>> by_domain_;
};

Database load_database(const std::filesystem::path& path, const Schema& schema);

// Per domain mentioned in the belief (first-mention order), the number of
// entities matching that domain's belief constraints.
DbResultSummary match_counts(const Database& db, const BeliefState& belief);

}  // namespace dialogen
