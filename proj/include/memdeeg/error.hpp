#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memdeeg {

enum class ErrorCode {
  InvalidArgument,
  MalformedFile,
  ChannelMismatch,
  TimelineOutOfRange,
  InvalidBand,
  FrameTooLong,
  DimensionMismatch,
  InsufficientExtrema,
  InputTooShort,
  EmptySelection,
  LengthMismatch,
  SingleClass,
  UnknownFeature,
  UnknownRegion,
  EmptyInput,
  TooFewTrials,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

  // Everything except I/O failures is caused by bad input or configuration.
  bool is_validation() const noexcept { return code_ != ErrorCode::Io; }

 private:
  ErrorCode code_;
};

}  // namespace memdeeg
