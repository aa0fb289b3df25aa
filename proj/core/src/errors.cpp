#include "polyner/errors.hpp"

namespace polyner {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::EmptyDocument: return "EmptyDocument";
    case ErrorKind::DuplicateLanguage: return "DuplicateLanguage";
    case ErrorKind::TagSetMismatch: return "TagSetMismatch";
    case ErrorKind::InvalidRate: return "InvalidRate";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptySentence: return "EmptySentence";
    case ErrorKind::BoundaryMismatch: return "BoundaryMismatch";
    case ErrorKind::OverlappingSpans: return "OverlappingSpans";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::VocabIncompatible: return "VocabIncompatible";
    case ErrorKind::EmptyRuns: return "EmptyRuns";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::MissingBaseline: return "MissingBaseline";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::UnsupportedArchitecture: return "UnsupportedArchitecture";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

}  // namespace polyner
