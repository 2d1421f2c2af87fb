#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace floorsight {

// Participant identifiers are short printable strings (e.g. "p1", "alice").
// Commas and whitespace are rejected so ids can be embedded in CSV/JSONL
// without quoting.
using ParticipantId = std::string;

bool is_valid_participant_id(const ParticipantId& id);

// Floor ordinal, assigned in order of floor emergence within a session.
// Ordinals start at 1 and are never reused.
struct FloorId {
  int ordinal = 0;

  friend auto operator<=>(const FloorId&, const FloorId&) = default;
};

// A contiguous voiced interval for one participant. Times are seconds from
// session start; energies are dBFS summaries over the voiced frames.
struct VadSegment {
  ParticipantId participant;
  double t0 = 0.0;
  double t1 = 0.0;
  double e_mean = 0.0;
  double e_peak = 0.0;

  double duration() const { return t1 - t0; }
};

// Merged VAD segments of one participant forming a turn at talk.
// onset_in_clear is true when no other participant was voiced at t0
// (the TRP positioning proxy).
struct Turn {
  ParticipantId participant;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<VadSegment> segments;
  bool onset_in_clear = false;
  double e_mean = 0.0;  // duration-weighted over segments

  double duration() const { return t1 - t0; }
};

// (participant, floor, t0, t1) affiliation label. Unaffiliated spans are
// represented by the absence of intervals, not a sentinel floor.
struct AffiliationInterval {
  ParticipantId participant;
  FloorId floor;
  double t0 = 0.0;
  double t1 = 0.0;
};

enum class CueKind {
  Sit,      // schism-inducing turn: direct address at turn start
  Aside,    // turn in overlap with subdued delivery
  Coord,    // coordinated short vocalizations (e.g. choral laughter)
  Confirm,  // verbal response engaging a parallel turn-taking system
};

const char* cue_kind_name(CueKind kind);

// A detected (or injected) schisming/affiliation event.
struct SchismCue {
  CueKind kind = CueKind::Sit;
  double t = 0.0;
  ParticipantId initiator;
  std::set<ParticipantId> responders;  // may be empty for SIT/ASIDE at emission
  double strength = 0.0;               // in [0,1]

  bool valid() const {
    return strength >= 0.0 && strength <= 1.0 && !responders.count(initiator);
  }
};

// Optional word-level annotation; is_address marks tokens found in the
// session address-term lexicon (names used for direct address).
struct TokenAnnotation {
  ParticipantId participant;
  double t0 = 0.0;
  double t1 = 0.0;
  std::string text;
  bool is_address = false;
};

using SegmentList = std::vector<VadSegment>;

// Per-participant segment streams, sorted by participant id. Within one
// participant, segments are sorted by t0 and non-overlapping.
struct ParticipantStream {
  ParticipantId participant;
  SegmentList segments;
};

using SessionStreams = std::vector<ParticipantStream>;

// Total voiced seconds of a stream restricted to [t0, t1).
double voiced_seconds(const SegmentList& segments, double t0, double t1);

}  // namespace floorsight
