#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stlcbf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  enum class Kind { kSyntax, kFragment, kInterval };

  ParseError(Kind kind, std::size_t position, const std::string& message)
      : Error(describe(kind) + " at position " + std::to_string(position) + ": " + message),
        kind_(kind),
        position_(position) {}

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  static std::string describe(Kind kind) {
    switch (kind) {
      case Kind::kSyntax: return "syntax error";
      case Kind::kFragment: return "formula outside the supported fragment";
      case Kind::kInterval: return "invalid interval";
    }
    return "parse error";
  }

  Kind kind_;
  std::size_t position_;
};

// The signal does not cover the time window a formula needs.
class HorizonError : public Error {
 public:
  using Error::Error;
};

// Term specifications that admit no parameter choice (empty r-interval, unsatisfiable predicate).
class SpecError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// Per-agent min-norm problem without a solution: zero gradient slice but positive requirement.
class InfeasibleStep : public Error {
 public:
  using Error::Error;
};

class SimulationAbort : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

// Parameter file produced for a different scenario.
class ParamsMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace stlcbf
