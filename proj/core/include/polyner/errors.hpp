#pragma once

#include <stdexcept>
#include <string>

namespace polyner {

enum class ErrorKind {
  MalformedLine,
  UnknownLabel,
  EmptyDocument,
  DuplicateLanguage,
  TagSetMismatch,
  InvalidRate,
  ShapeMismatch,
  NonFiniteGradient,
  LengthMismatch,
  EmptySentence,
  BoundaryMismatch,
  OverlappingSpans,
  EmptySplit,
  DivergedLoss,
  VocabIncompatible,
  EmptyRuns,
  IoError,
  VersionMismatch,
  ChecksumMismatch,
  InvalidFraction,
  MissingBaseline,
  LayoutMismatch,
  UnsupportedArchitecture,
  InvalidConfig,
  InvalidArgument,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace polyner
