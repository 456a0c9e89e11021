#pragma once

#include <stdexcept>
#include <string>

namespace mumkit {

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kPartialFailure = 2,
  kInvariant = 3,
};

enum class ErrorKind {
  kParse,       // malformed input file
  kConfig,      // bad configuration or usage
  kInvariant,   // data violates a documented invariant
  kTransport,   // evaluator could not be reached
  kCoverage,    // lexicon does not cover a word
  kState,       // wrong pipeline state (missing artifact, manifest mismatch)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvariant:
      return ExitCode::kInvariant;
    case ErrorKind::kTransport:
      return ExitCode::kPartialFailure;
    default:
      return ExitCode::kUsage;
  }
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInvariant: return "invariant";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kCoverage: return "coverage";
    case ErrorKind::kState: return "state";
  }
  return "unknown";
}

}  // namespace mumkit
