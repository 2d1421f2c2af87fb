#pragma once

#include <map>
#include <vector>

#include "floorsight/types.hpp"

namespace floorsight {

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;

  double length() const { return t1 - t0; }
};

struct TurnParams {
  double merge_gap = 0.5;            // intra-participant gaps below this join one turn
  double alignment_tolerance = 0.5;  // onset-to-offset distance counted as aligned
};

// Pairwise turn-taking features over a window. overlap_frac is cospeech
// normalized by the quieter side's voiced time; alignment is the fraction of
// one side's turn onsets landing near the other's turn offsets, averaged
// over both directions.
struct PairFeatures {
  ParticipantId a;  // a < b
  ParticipantId b;
  TimeWindow window;
  double overlap_frac = 0.0;
  double alignment = 0.0;
  double cospeech_seconds = 0.0;
};

// Merge each participant's segments into turns (gap < merge_gap joins) and
// flag onsets produced while no other participant was voiced. Output is
// sorted by t0, then participant.
std::vector<Turn> build_turns(const SessionStreams& streams, double merge_gap);

// One turn from a non-empty run of one participant's segments
// (onset_in_clear left false; fill via voiced_at on the full session).
Turn merge_into_turn(std::vector<VadSegment> segments);

// True if any segment of a participant other than `self` covers t.
bool other_voiced_at(const SessionStreams& streams, const ParticipantId& self, double t);

// Interval union of all streams' voiced sets, as one sorted segment list.
SegmentList union_voiced(const SessionStreams& streams);

// Total intersection of two voiced sets within [window.t0, window.t1).
double cospeech_seconds(const SegmentList& a, const SegmentList& b, TimeWindow window);

// Overlap side of PairFeatures. Zero when either side is silent in window.
PairFeatures pairwise_overlap_stats(const ParticipantStream& a, const ParticipantStream& b,
                                    TimeWindow window);

// Fraction of a's turn onsets inside the window that fall within
// [-g, +g] of some turn offset of b, averaged with the mirror-image
// fraction. Sides without onsets in the window do not contribute; 0 when
// neither has any.
double alignment_score(const std::vector<Turn>& turns_a, const std::vector<Turn>& turns_b,
                       TimeWindow window, double g);

// One PairFeatures per unordered pair of participants.
std::vector<PairFeatures> windowed_features(const SessionStreams& streams, TimeWindow window,
                                            const TurnParams& params);

// As above but with turns supplied (grouped per participant), for callers
// that maintain turns incrementally.
std::vector<PairFeatures> windowed_features(const SessionStreams& streams,
                                            const std::map<ParticipantId, std::vector<Turn>>& turns,
                                            TimeWindow window, const TurnParams& params);

}  // namespace floorsight
