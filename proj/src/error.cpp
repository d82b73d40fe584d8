#include "irpf/error.hpp"

namespace irpf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::DurationTooLong: return "DurationTooLong";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidLabelValue: return "InvalidLabelValue";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::BandOutOfRange: return "BandOutOfRange";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::AllZeroSignal: return "AllZeroSignal";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonPositiveDistance: return "NonPositiveDistance";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OutOfRangeP: return "OutOfRangeP";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooFewEpochs: return "TooFewEpochs";
    case ErrorCode::TooFewCleanEpochs: return "TooFewCleanEpochs";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

}  // namespace irpf
