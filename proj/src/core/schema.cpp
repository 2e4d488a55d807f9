#include "dialogen/core/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "dialogen/core/error.hpp"

namespace dialogen {

namespace {

const std::set<std::string> kSchemaKeys = {"domains", "intents", "slots",
                                           "requestable", "informable", "goal_slot_weights"};

bool is_valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return !std::isspace(c) && !std::isupper(c) && c < 0x80;
  });
}

template <typename T>
T get_or_throw(const nlohmann::json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema: field '" + what + "' has the wrong type: " + e.what());
  }
}

}  // namespace

std::string count_token(int count) {
  if (count < 0) throw ValidationError("db count must be non-negative, got " + std::to_string(count));
  if (count >= kCountBucket) return std::to_string(kCountBucket) + "+";
  return std::to_string(count);
}

std::string normalize_name(std::string_view raw) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string normalize_value(std::string_view raw) {
  return join_tokens(split_whitespace(raw));
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("schema: top level must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kSchemaKeys.contains(key)) throw ParseError("schema: unknown key '" + key + "'");
  }
  for (const auto& key : kSchemaKeys) {
    if (!j.contains(key)) throw ParseError("schema: missing key '" + key + "'");
  }

  Schema schema;
  std::vector<std::string> intents;
  for (const auto& i : get_or_throw<std::vector<std::string>>(j.at("intents"), "intents")) {
    intents.push_back(normalize_name(i));
  }
  schema.set_intents(std::move(intents));

  const auto domains = get_or_throw<std::vector<std::string>>(j.at("domains"), "domains");
  for (const auto& raw_domain : domains) {
    const std::string d = normalize_name(raw_domain);
    DomainSchema ds;
    const auto& slots = j.at("slots");
    if (!slots.contains(raw_domain)) throw ValidationError("schema: slots missing for domain '" + d + "'");
    for (const auto& [slot, values] : slots.at(raw_domain).items()) {
      std::vector<std::string> vocab;
      for (const auto& v : get_or_throw<std::vector<std::string>>(values, "slots." + d + "." + slot)) {
        vocab.push_back(normalize_value(v));
      }
      ds.slots[normalize_name(slot)] = std::move(vocab);
    }
    auto read_set = [&](const char* key) {
      std::set<std::string> out;
      const auto& section = j.at(key);
      if (section.contains(raw_domain)) {
        for (const auto& s : get_or_throw<std::vector<std::string>>(section.at(raw_domain),
                                                                    std::string(key) + "." + d)) {
          out.insert(normalize_name(s));
        }
      }
      return out;
    };
    ds.requestable = read_set("requestable");
    ds.informable = read_set("informable");
    const auto& weights = j.at("goal_slot_weights");
    if (weights.contains(raw_domain)) {
      for (const auto& [slot, w] : weights.at(raw_domain).items()) {
        ds.goal_slot_weights[normalize_name(slot)] =
            get_or_throw<double>(w, "goal_slot_weights." + d + "." + slot);
      }
    }
    schema.add_domain(d, std::move(ds));
  }
  for (const char* key : {"slots", "requestable", "informable", "goal_slot_weights"}) {
    for (const auto& [d, _] : j.at(key).items()) {
      if (!schema.has_domain(normalize_name(d))) {
        throw ValidationError(std::string("schema: ") + key + " names unknown domain '" + d + "'");
      }
    }
  }
  schema.validate();
  return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("schema file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json j;
  j["domains"] = domain_order_;
  j["intents"] = intents_;
  j["slots"] = nlohmann::json::object();
  j["requestable"] = nlohmann::json::object();
  j["informable"] = nlohmann::json::object();
  j["goal_slot_weights"] = nlohmann::json::object();
  for (const auto& d : domain_order_) {
    const auto& ds = domains_.at(d);
    j["slots"][d] = ds.slots;
    j["requestable"][d] = ds.requestable;
    j["informable"][d] = ds.informable;
    j["goal_slot_weights"][d] = ds.goal_slot_weights;
  }
  return j;
}

void Schema::validate() const {
  if (domain_order_.empty()) throw ValidationError("schema: no domains");
  if (intents_.empty()) throw ValidationError("schema: no intents");
  for (const auto& i : intents_) {
    if (!is_valid_name(i)) throw ValidationError("schema: invalid intent name '" + i + "'");
  }
  for (const auto& d : domain_order_) {
    if (!is_valid_name(d)) throw ValidationError("schema: invalid domain name '" + d + "'");
    const auto& ds = domains_.at(d);
    for (const auto& [slot, vocab] : ds.slots) {
      if (!is_valid_name(slot)) throw ValidationError("schema: invalid slot name '" + d + "." + slot + "'");
      for (const auto& v : vocab) {
        if (v.empty()) throw ValidationError("schema: empty value in slot '" + d + "." + slot + "'");
      }
    }
    for (const auto& s : ds.requestable) {
      if (!ds.slots.contains(s)) throw ValidationError("schema: requestable slot '" + d + "." + s + "' not in slots");
    }
    for (const auto& s : ds.informable) {
      if (!ds.slots.contains(s)) throw ValidationError("schema: informable slot '" + d + "." + s + "' not in slots");
    }
    bool any_positive = false;
    for (const auto& [s, w] : ds.goal_slot_weights) {
      if (!ds.slots.contains(s)) throw ValidationError("schema: goal_slot_weights slot '" + d + "." + s + "' not in slots");
      if (!(w >= 0.0)) throw ValidationError("schema: goal_slot_weights '" + d + "." + s + "' must be >= 0");
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw ValidationError("schema: domain '" + d + "' needs at least one positive goal slot weight");
  }
}

const DomainSchema& Schema::domain(const std::string& name) const {
  auto it = domains_.find(name);
  if (it == domains_.end()) throw ValidationError("unknown domain '" + name + "'");
  return it->second;
}

bool Schema::has_domain(std::string_view d) const { return domains_.find(d) != domains_.end(); }

bool Schema::has_intent(std::string_view i) const {
  return std::find(intents_.begin(), intents_.end(), i) != intents_.end();
}

bool Schema::has_slot(std::string_view d, std::string_view s) const {
  auto it = domains_.find(d);
  return it != domains_.end() && it->second.slots.contains(std::string(s));
}

bool Schema::has_value(std::string_view d, std::string_view s, std::string_view v) const {
  auto it = domains_.find(d);
  if (it == domains_.end()) return false;
  auto slot = it->second.slots.find(std::string(s));
  if (slot == it->second.slots.end()) return false;
  return std::find(slot->second.begin(), slot->second.end(), v) != slot->second.end();
}

bool Schema::is_requestable(std::string_view d, std::string_view s) const {
  auto it = domains_.find(d);
  return it != domains_.end() && it->second.requestable.contains(std::string(s));
}

bool Schema::is_informable(std::string_view d, std::string_view s) const {
  auto it = domains_.find(d);
  return it != domains_.end() && it->second.informable.contains(std::string(s));
}

bool Schema::is_token(std::string_view t) const {
  return std::binary_search(tokens_.begin(), tokens_.end(), t);
}

void Schema::rebuild_tokens() {
  std::set<std::string> out(intents_.begin(), intents_.end());
  for (const auto& d : domain_order_) {
    out.insert(d);
    for (const auto& [slot, vocab] : domains_.at(d).slots) {
      out.insert(slot);
      for (const auto& v : vocab) {
        for (auto& t : split_whitespace(v)) out.insert(std::move(t));
      }
    }
  }
  for (int n = 0; n <= kCountBucket; ++n) out.insert(count_token(n));
  out.insert(std::string(kNoneValue));
  tokens_.assign(out.begin(), out.end());
}

void Schema::add_domain(const std::string& name, DomainSchema d) {
  if (!domains_.contains(name)) domain_order_.push_back(name);
  domains_[name] = std::move(d);
  rebuild_tokens();
}

void Schema::set_intents(std::vector<std::string> intents) {
  intents_ = std::move(intents);
  rebuild_tokens();
}

}  // namespace dialogen
