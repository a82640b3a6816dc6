#include "memdeeg/error.hpp"

namespace memdeeg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::TimelineOutOfRange: return "TimelineOutOfRange";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::FrameTooLong: return "FrameTooLong";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientExtrema: return "InsufficientExtrema";
    case ErrorCode::InputTooShort: return "InputTooShort";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::UnknownRegion: return "UnknownRegion";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewTrials: return "TooFewTrials";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace memdeeg
