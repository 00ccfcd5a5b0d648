#include "msrate/error.h"

namespace msrate {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::TruncatedFrame: return "TruncatedFrame";
    case ErrorKind::ZeroDimension: return "ZeroDimension";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::UnknownCrf: return "UnknownCrf";
    case ErrorKind::MissingFeatureColumn: return "MissingFeatureColumn";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::NonPositiveLogTarget: return "NonPositiveLogTarget";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::NoInputs: return "NoInputs";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyJoin: return "EmptyJoin";
    case ErrorKind::UnknownModelFile: return "UnknownModelFile";
    case ErrorKind::PresetMismatch: return "PresetMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace msrate
