#pragma once

#include <stdexcept>
#include <string>

namespace floorsight {

enum class ErrorCode {
  SignalCorrupt,    // non-finite samples in an audio stream
  EmptyInput,
  TooFewParticipants,
  OutOfOrder,       // timestamp regression beyond the reorder tolerance
  NoBaseline,       // speaker has too little history for an energy baseline
  Stale,            // retroactive amendment target fell out of the horizon
  ParseError,
  InvalidSegments,
  InvalidLabels,
  UnknownPreset,
  NoScorablePairs,
  BadArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace floorsight
