#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dialogen {

inline constexpr std::string_view kClsToken = "[cls]";
inline constexpr std::string_view kStartToken = "[start]";
inline constexpr std::string_view kEndToken = "[end]";
inline constexpr std::string_view kPadToken = "[pad]";
inline constexpr std::string_view kUnkToken = "[unk]";

inline constexpr std::string_view kRequestValue = "?";
inline constexpr std::string_view kNoneValue = "none";
inline constexpr std::string_view kInformIntent = "inform";
inline constexpr std::string_view kRequestIntent = "request";
inline constexpr std::string_view kByeIntent = "bye";

// Count tokens used by the database linearization: "0".."9" and "10+".
inline constexpr int kCountBucket = 10;
std::string count_token(int count);

struct DomainSchema {
  // slot name -> value vocabulary (values may contain spaces)
  std::map<std::string, std::vector<std::string>> slots;
  std::set<std::string> requestable;
  std::set<std::string> informable;
  std::map<std::string, double> goal_slot_weights;
};

// Closed vocabularies of domains, intents, slots and values.
class Schema {
 public:
  Schema() = default;

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws ValidationError naming the first violated invariant.
  void validate() const;

  const std::vector<std::string>& domains() const { return domain_order_; }
  const std::vector<std::string>& intents() const { return intents_; }
  const DomainSchema& domain(const std::string& name) const;

  bool has_domain(std::string_view d) const;
  bool has_intent(std::string_view i) const;
  bool has_slot(std::string_view d, std::string_view s) const;
  bool has_value(std::string_view d, std::string_view s, std::string_view v) const;
  bool is_requestable(std::string_view d, std::string_view s) const;
  bool is_informable(std::string_view d, std::string_view s) const;

  // Every token that can appear in a linearized state or action text:
  // names, whitespace-split values and count tokens. Sorted, unique.
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool is_token(std::string_view t) const;

  void add_domain(const std::string& name, DomainSchema d);
  void set_intents(std::vector<std::string> intents);

 private:
  std::vector<std::string> domain_order_;
  std::map<std::string, DomainSchema, std::less<>> domains_;
  std::vector<std::string> intents_;
  std::vector<std::string> tokens_;

  void rebuild_tokens();
};

// Lowercase ASCII, interior whitespace collapsed to '_'.
std::string normalize_name(std::string_view raw);
// Lowercase ASCII, runs of whitespace collapsed to one space, trimmed.
std::string normalize_value(std::string_view raw);
std::vector<std::string> split_whitespace(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace dialogen
