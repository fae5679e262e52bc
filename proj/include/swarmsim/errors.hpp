#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmsim {

// Argument errors use std::invalid_argument, unknown ids std::out_of_range.

/// Non-finite state or input reached the kinematics.
class ModelIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration, plan, or profile failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

/// Input file rejected; carries every offending row, not just the first.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::vector<RowError> rows)
      : std::runtime_error(what), rows_(std::move(rows)) {}

  const std::vector<RowError>& rows() const noexcept { return rows_; }

 private:
  std::vector<RowError> rows_;
};

}  // namespace swarmsim
