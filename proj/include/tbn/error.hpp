#pragma once

#include <stdexcept>
#include <string>

namespace tbn {

enum class ErrorKind {
  invalid_label,
  empty_vocabulary,
  unknown_intent,
  split,
  bounds,
  shape,
  naming,
  convergence,
  schema,
  inconsistent_evidence,
  evidence_scope,
  input,
  contract,
  estimation,
  configuration,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_label: return "invalid-label";
    case ErrorKind::empty_vocabulary: return "empty-vocabulary";
    case ErrorKind::unknown_intent: return "unknown-intent";
    case ErrorKind::split: return "split";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::shape: return "shape";
    case ErrorKind::naming: return "naming";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::schema: return "schema";
    case ErrorKind::inconsistent_evidence: return "inconsistent-evidence";
    case ErrorKind::evidence_scope: return "evidence-scope";
    case ErrorKind::input: return "input";
    case ErrorKind::contract: return "contract";
    case ErrorKind::estimation: return "estimation";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Base exception for every domain failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when the augmented-Lagrangian loop cannot push h(W) under tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_h)
      : Error(ErrorKind::convergence, message), last_h_(last_h) {}

  double last_h() const noexcept { return last_h_; }

 private:
  double last_h_;
};

}  // namespace tbn
