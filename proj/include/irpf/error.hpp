#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace irpf {

enum class ErrorCode {
  MalformedFile,
  EmptyFile,
  DurationTooLong,
  LengthMismatch,
  InvalidLabelValue,
  UnknownChannel,
  BandOutOfRange,
  EmptyField,
  InvalidConfig,
  CutoffOutOfRange,
  TooShort,
  AllZeroSignal,
  RankDeficient,
  DimensionMismatch,
  NoConvergence,
  NonPositiveDistance,
  EmptyInput,
  OutOfRangeP,
  TooFewPoints,
  TooFewEpochs,
  TooFewCleanEpochs,
  ZeroVariance,
  InvalidSpec,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace irpf
