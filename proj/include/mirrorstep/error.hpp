#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mirrorstep {

// A parameter or input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A point lies outside the domain of a distance-generating function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A caller asked for more work than an exhaustive routine allows.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was broken (e.g. an iterate left its feasible set).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mirrorstep
