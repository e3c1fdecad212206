#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace wavelab {

/// Machine-readable failure categories. The string form (see to_string) is
/// what appears in JSON run reports.
enum class ErrorCode {
  invalid_argument,
  unsupported_space,
  compatibility_violation,
  solver_failure,
  invalid_state,
  invalid_pair,
  layout_mismatch,
  validation,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class UnsupportedSpace : public Error {
 public:
  explicit UnsupportedSpace(const std::string& what) : Error(ErrorCode::unsupported_space, what) {}
};

class CompatibilityViolation : public Error {
 public:
  explicit CompatibilityViolation(const std::string& what)
      : Error(ErrorCode::compatibility_violation, what) {}
};

/// Thrown when an iterative or direct solve does not meet its contract.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, int iterations, double relative_residual)
      : Error(ErrorCode::solver_failure, what),
        iterations_(iterations),
        relative_residual_(relative_residual) {}

  int iterations() const noexcept { return iterations_; }
  double relative_residual() const noexcept { return relative_residual_; }

 private:
  int iterations_;
  double relative_residual_;
};

class InvalidState : public Error {
 public:
  explicit InvalidState(const std::string& what) : Error(ErrorCode::invalid_state, what) {}
};

class InvalidPair : public Error {
 public:
  explicit InvalidPair(const std::string& what) : Error(ErrorCode::invalid_pair, what) {}
};

class LayoutMismatch : public Error {
 public:
  explicit LayoutMismatch(const std::string& what) : Error(ErrorCode::layout_mismatch, what) {}
};

/// Bad user input that is not tied to one operation argument.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCode::validation, what) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path) : Error(ErrorCode::io, what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace wavelab
