#include "dialogen/db/database.hpp"

#include <fstream>
#include <sstream>

#include "dialogen/core/error.hpp"

namespace dialogen {

namespace {

const std::vector<Entity> kNoEntities;

void validate_entity(const Schema& schema, const Entity& e, std::size_t index) {
  const std::string where = "entity " + std::to_string(index);
  if (!schema.has_domain(e.domain)) throw ValidationError(where + ": unknown domain '" + e.domain + "'");
  for (const auto& [slot, value] : e.values) {
    if (!schema.has_slot(e.domain, slot)) {
      throw ValidationError(where + ": unknown slot '" + slot + "' for domain '" + e.domain + "'");
    }
    if (!schema.has_value(e.domain, slot, value)) {
      throw ValidationError(where + ": value '" + value + "' not in vocabulary of slot '" + slot + "'");
    }
  }
}

}  // namespace

const std::string* Entity::get(const std::string& slot) const {
  auto it = values.find(slot);
  return it == values.end() ? nullptr : &it->second;
}

Database::Database(const Schema& schema, std::vector<Entity> entities) {
  for (std::size_t i = 0; i < entities.size(); ++i) {
    validate_entity(schema, entities[i], i);
    by_domain_[entities[i].domain].push_back(std::move(entities[i]));
  }
}

Database Database::from_json(const Schema& schema, const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("database: top level must be a JSON array of entities");
  std::vector<Entity> entities;
  entities.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string where = "database: entity " + std::to_string(i);
    if (!e.is_object()) throw ParseError(where + " is not an object");
    for (const auto& [key, _] : e.items()) {
      if (key != "domain" && key != "values") throw ParseError(where + ": unknown field '" + key + "'");
    }
    if (!e.contains("domain") || !e.at("domain").is_string()) {
      throw ParseError(where + ": field 'domain' missing or not a string");
    }
    if (!e.contains("values") || !e.at("values").is_object()) {
      throw ParseError(where + ": field 'values' missing or not an object");
    }
    Entity ent;
    ent.domain = normalize_name(e.at("domain").get<std::string>());
    for (const auto& [slot, v] : e.at("values").items()) {
      if (!v.is_string()) throw ParseError(where + ": field 'values." + slot + "' is not a string");
      ent.values[normalize_name(slot)] = normalize_value(v.get<std::string>());
    }
    entities.push_back(std::move(ent));
  }
  return Database(schema, std::move(entities));
}

EntityRefs Database::query(const std::string& domain,
                           const std::map<std::string, std::string>& constraints) const {
  EntityRefs out;
  auto it = by_domain_.find(domain);
  if (it == by_domain_.end()) return out;
  for (const auto& e : it->second) {
    bool ok = true;
    for (const auto& [slot, value] : constraints) {
      const std::string* v = e.get(slot);
      if (v == nullptr || *v != value) {
        ok = false;
        break;
      }
    }
    if (ok) out.emplace_back(e);
  }
  return out;
}

const std::vector<Entity>& Database::entities(const std::string& domain) const {
  auto it = by_domain_.find(domain);
  return it == by_domain_.end() ? kNoEntities : it->second;
}

std::size_t Database::size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : by_domain_) n += v.size();
  return n;
}

std::vector<std::string> Database::domains() const {
  std::vector<std::string> out;
  for (const auto& [d, _] : by_domain_) out.push_back(d);
  return out;
}

Database load_database(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open database file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line number for the diagnostic.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw ParseError("database file " + path.string() + ", line " + std::to_string(line) + ": " + e.what());
  }
  return Database::from_json(schema, j);
}

DbResultSummary match_counts(const Database& db, const BeliefState& belief) {
  DbResultSummary out;
  for (const auto& d : belief.domains()) {
    out.counts.emplace_back(d, static_cast<int>(db.query(d, belief.constraints(d)).size()));
  }
  return out;
}

}  // namespace dialogen
