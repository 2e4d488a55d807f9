#pragma once

#include <stdexcept>
#include <string>

namespace dialogen {

// Schema or input-data validation failure. The message names the offending field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file content (JSON syntax, wrong shape, unknown keys).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse, e.g. stepping a terminated simulator or calling backward twice.
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dialogen
