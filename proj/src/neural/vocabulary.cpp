#include "dialogen/neural/vocabulary.hpp"

#include "dialogen/core/error.hpp"

namespace dialogen::nn {

namespace {

std::vector<std::string> specials() {
  return {std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
          std::string(kStartToken), std::string(kEndToken)};
}

}  // namespace

Vocabulary::Vocabulary(const Schema& schema) {
  std::vector<std::string> toks = specials();
  for (const auto& t : schema.tokens()) toks.push_back(t);
  *this = Vocabulary(std::move(toks));
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto sp = specials();
  if (tokens_.size() < sp.size() || !std::equal(sp.begin(), sp.end(), tokens_.begin())) {
    throw ValidationError("vocabulary must start with the special tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw UsageError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

}  // namespace dialogen::nn
