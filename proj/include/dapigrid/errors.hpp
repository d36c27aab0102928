#pragma once

#include <stdexcept>
#include <string>

namespace dapigrid {

/// Process exit status associated with each error family.
enum class ExitCode : int {
  kOk = 0,
  kParse = 1,
  kValidation = 2,
  kNumeric = 3,
  kNoConvergence = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed input text (JSON syntax, unreadable file).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ExitCode::kParse, what) {}
};

/// Well-formed input that violates a model invariant. `field` is a JSON-pointer
/// style path when the error comes from a scenario file.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& reason)
      : Error(ExitCode::kValidation, field.empty() ? reason : field + ": " + reason),
        field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Electrical network split into islands.
class TopologyError : public Error {
 public:
  explicit TopologyError(const std::string& what) : Error(ExitCode::kNumeric, what) {}
};

/// Nonpositive voltage fed to a power-flow evaluation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ExitCode::kNumeric, what) {}
};

/// Integrator failure, NaN, eigensolver breakdown.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kNumeric, what) {}
};

/// A run that did not settle within its horizon.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error(ExitCode::kNoConvergence, what) {}
};

}  // namespace dapigrid
