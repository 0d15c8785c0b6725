#pragma once

#include <stdexcept>
#include <string>

namespace reinitlab {

/// Invalid experiment configuration or architecture description. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or other numeric breakdown. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Broken internal precondition (caller bug rather than bad user input).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace reinitlab
