#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dialogen/core/schema.hpp"

namespace dialogen::nn {

// Token <-> id map. Specials come first in a fixed order, then the schema
// tokens sorted; ids are contiguous from 0.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kStart = 3;
  static constexpr int kEnd = 4;

  Vocabulary() = default;
  explicit Vocabulary(const Schema& schema);
  explicit Vocabulary(std::vector<std::string> tokens);  // restores a saved token list

  int size() const { return static_cast<int>(tokens_.size()); }
  // Unknown tokens map to kUnk.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace dialogen::nn
