#ifndef MSRATE_ERROR_H
#define MSRATE_ERROR_H

#include <stdexcept>
#include <string>
#include <string_view>

namespace msrate {

enum class ErrorKind {
  // frame-io
  MalformedHeader,
  UnsupportedFormat,
  TruncatedFrame,
  ZeroDimension,
  // motion-analysis
  OutOfBounds,
  DimensionMismatch,
  // descriptors
  EmptySequence,
  // regression
  InsufficientData,
  NonConvergence,
  UnknownCrf,
  MissingFeatureColumn,
  // evaluation
  LengthMismatch,
  ZeroDenominator,
  NonPositiveLogTarget,
  ZeroVariance,
  TooFewRows,
  // pipeline
  NoInputs,
  SchemaMismatch,
  EmptyJoin,
  UnknownModelFile,
  PresetMismatch,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace msrate

#endif  // MSRATE_ERROR_H
