#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spiro {

enum class ErrorKind {
  InvalidInput,
  OnsetNotFound,
  SignalTooShort,
  InsufficientPeaks,
  RejectedManeuver,
  SchemaError,
  InvalidDataset,
  FormatError,
  ValidationError,
  IoError,
  UncertainInput,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::OnsetNotFound: return "OnsetNotFound";
    case ErrorKind::SignalTooShort: return "SignalTooShort";
    case ErrorKind::InsufficientPeaks: return "InsufficientPeaks";
    case ErrorKind::RejectedManeuver: return "RejectedManeuver";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvalidDataset: return "InvalidDataset";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UncertainInput: return "UncertainInput";
  }
  return "Unknown";
}

/// Process exit code for each error class. 0 is success, 1 is reserved for
/// usage errors reported by the argument parser.
constexpr int exit_code(ErrorKind kind) noexcept {
  return 10 + static_cast<int>(kind);
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace spiro
