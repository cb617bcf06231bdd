#pragma once

#include <stdexcept>
#include <string>

namespace flatres {

/// Raised when an evaluation leaves the region where the maps involved are
/// defined (negative thrust argument, atan2 at the origin, division by a
/// zero value slot, validity predicate violated).  `level` identifies the
/// recursion level of the flat map that triggered the error; -1 means the
/// error was raised outside the recursion.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what, int level = -1)
      : std::runtime_error(what), level_(level) {}
  int level() const noexcept { return level_; }

 private:
  int level_;
};

/// Raised by file readers on malformed, truncated, or version-mismatched
/// input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flatres
