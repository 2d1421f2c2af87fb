#include "floorsight/types.hpp"

#include <algorithm>
#include <cctype>

#include "floorsight/errors.hpp"

namespace floorsight {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SignalCorrupt: return "SIGNAL_CORRUPT";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::TooFewParticipants: return "TOO_FEW";
    case ErrorCode::OutOfOrder: return "OUT_OF_ORDER";
    case ErrorCode::NoBaseline: return "NO_BASELINE";
    case ErrorCode::Stale: return "STALE";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::InvalidSegments: return "INVALID_SEGMENTS";
    case ErrorCode::InvalidLabels: return "INVALID_LABELS";
    case ErrorCode::UnknownPreset: return "UNKNOWN_PRESET";
    case ErrorCode::NoScorablePairs: return "NO_SCORABLE_PAIRS";
    case ErrorCode::BadArgument: return "BAD_ARGUMENT";
  }
  return "UNKNOWN";
}

const char* cue_kind_name(CueKind kind) {
  switch (kind) {
    case CueKind::Sit: return "SIT";
    case CueKind::Aside: return "ASIDE";
    case CueKind::Coord: return "COORD";
    case CueKind::Confirm: return "CONFIRM";
  }
  return "UNKNOWN";
}

bool is_valid_participant_id(const ParticipantId& id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](unsigned char c) {
    return c == ',' || std::isspace(c) || !std::isprint(c);
  });
}

double voiced_seconds(const SegmentList& segments, double t0, double t1) {
  double total = 0.0;
  for (const auto& s : segments) {
    double lo = std::max(s.t0, t0);
    double hi = std::min(s.t1, t1);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

}  // namespace floorsight
