#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qrdm {

/// Thrown when a caller breaks a documented precondition (dimension
/// mismatch, out-of-range index, invalid parameter).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A column with zero norm was handed to a routine that normalizes columns.
class degenerate_column_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No column has positive norm, so no pivot seed exists.
class empty_candidate_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qrdm
