#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sgmds {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (bad syntax, unexpected record, truncated data).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// One concrete violation found while validating an input.
struct ValidationIssue {
  std::string kind;            // e.g. "degenerate_triangle", "nonmanifold_edge"
  std::vector<long> indices;   // offending vertex/triangle indices
  std::string detail;
};

/// Input violates a documented invariant. Carries every violation found,
/// not just the first.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& msg, std::vector<ValidationIssue> issues)
      : Error(msg), issues_(std::move(issues)) {}
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// Numerical failure (non-convergence, singular system, NaN encountered).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
  NumericalError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Filesystem / IO failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Cache file rejected (bad magic, version, or content-hash mismatch).
class CacheError : public Error {
 public:
  explicit CacheError(const std::string& msg) : Error(msg) {}
};

}  // namespace sgmds
