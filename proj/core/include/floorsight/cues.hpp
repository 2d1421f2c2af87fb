#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "floorsight/turns.hpp"
#include "floorsight/types.hpp"

namespace floorsight {

struct DetectorParams {
  double sit_initial_window = 2.0;   // address token must start this close to turn onset
  double aside_delta = 8.0;          // dB below speaker baseline
  double baseline_horizon = 120.0;   // seconds of history for the running baseline
  double coord_onset_tau = 0.5;      // burst onsets must fall within this of each other
  int coord_min_participants = 3;
  double coord_max_burst = 3.0;      // segments longer than this are not bursts
  double coord_corr_min = 0.3;       // mean pairwise envelope correlation gate
  double confirm_max_gap = 2.0;      // response onset vs initiating turn end

  bool valid() const {
    return sit_initial_window > 0 && aside_delta > 0 && baseline_horizon > 0 &&
           coord_onset_tau > 0 && coord_min_participants >= 2 && coord_max_burst > 0 &&
           coord_corr_min >= -1.0 && coord_corr_min <= 1.0 && confirm_max_gap > 0;
  }
};

// Address-token cue at turn onset (direct verbal address). Strength grows
// with token repetition and an in-the-clear onset. Tokens must belong to the
// turn's participant and overlap the turn.
std::optional<SchismCue> detect_sit_cue(const Turn& turn,
                                        const std::vector<TokenAnnotation>& tokens,
                                        const DetectorParams& params);

// Subdued-delivery-in-overlap cue. speaker_baseline is the running median of
// the speaker's recent turn energies; throws NO_BASELINE when absent.
std::optional<SchismCue> detect_aside_cue(const Turn& turn,
                                          std::optional<double> speaker_baseline,
                                          const DetectorParams& params);

// Finely-timed short vocalizations across >= coord_min_participants whose
// energy envelopes correlate over the common span.
std::optional<SchismCue> detect_coordinated_action(const SessionStreams& streams,
                                                   TimeWindow window,
                                                   const DetectorParams& params);

// Verbal response engaging a parallel turn-taking system: a turn by another
// participant adjacent to (or overlapping) the candidate, after which the
// pair sustains >= 2 s of simultaneous speech with the ongoing floor within
// the next 10 s. ongoing_floor_activity excludes the pair.
std::optional<SchismCue> detect_schism_confirmation(const Turn& candidate_initiating,
                                                    const std::vector<Turn>& subsequent,
                                                    const SessionStreams& ongoing_floor_activity,
                                                    const DetectorParams& params);

// Mean pairwise Pearson correlation of the participants' energy envelopes
// (sampled from segments at a 10 ms grid) over [span.t0, span.t1).
// Zero-variance envelopes contribute 0.
double mean_envelope_correlation(const SessionStreams& streams, TimeWindow span);

// Running median of a speaker's turn energies over the trailing horizon.
// Returns nothing until the speaker has >= 5 s of finalized speech there.
class BaselineTracker {
 public:
  explicit BaselineTracker(double horizon) : horizon_(horizon) {}

  void add_turn(const Turn& turn);
  std::optional<double> baseline(const ParticipantId& speaker, double now) const;

 private:
  struct Entry {
    double t1, e_mean, dur;
  };
  double horizon_;
  std::map<ParticipantId, std::deque<Entry>> history_;
};

// A confirmed schism forwarded to the floor engine: which turn initiated,
// who responded, and when. Produced for every confirmed initiating turn —
// including ones already cued as SIT/ASIDE, whose cue records keep the
// earlier kind rather than double-reporting as CONFIRM.
struct ConfirmDecision {
  Turn initiating;
  ParticipantId responder;
  double t_response = 0.0;
  bool cued_as_sit_or_aside = false;
};

// Streaming driver composing the four detectors over one session. Segments
// are fed in t0 order; decided cues come back from poll()/finish() sorted by
// time. Lookahead is bounded: nothing is decided later than 10 s past the
// triggering onset.
class CueDetectorBank {
 public:
  // Current floor co-members of a participant (including the participant
  // itself). Defaults to "everyone seen so far".
  using FloorMembersFn = std::function<std::set<ParticipantId>(const ParticipantId&, double)>;

  CueDetectorBank(DetectorParams params, TurnParams turn_params);

  void set_tokens(std::vector<TokenAnnotation> tokens);
  void set_floor_lookup(FloorMembersFn lookup);

  void add_segment(const VadSegment& segment);

  // Cues decidable with data up to `now` (finish() flushes the rest).
  std::vector<SchismCue> poll(double now);
  std::vector<SchismCue> finish();

  // Confirm decisions accumulated since the last call; consumed by the engine.
  std::vector<ConfirmDecision> drain_confirms();

  // Drop buffered history older than `before` (memory bound).
  void trim(double before);

 private:
  struct PendingConfirm {
    Turn initiating;
    Turn response;
    bool cued_as_sit_or_aside;
    double deadline;  // response onset + 10 s
    std::set<ParticipantId> others;  // ongoing-floor members minus the pair
  };
  struct BurstRef {
    VadSegment segment;
    bool consumed = false;
  };

  void finalize_ready_turns(double now, bool flush);
  void on_turn_finalized(const Turn& turn);
  void detect_coord_groups(double now, bool flush);
  void resolve_confirms(double now, bool flush);
  SessionStreams streams_for(const std::set<ParticipantId>& include) const;

  DetectorParams params_;
  TurnParams turn_params_;
  std::vector<TokenAnnotation> tokens_;  // sorted by t0
  FloorMembersFn floor_lookup_;

  std::map<ParticipantId, SegmentList> history_;
  std::set<ParticipantId> seen_;
  std::map<ParticipantId, std::vector<VadSegment>> open_turns_;
  std::map<ParticipantId, std::deque<Turn>> recent_turns_;
  BaselineTracker baselines_;
  std::vector<double> session_energies_;  // finalized turn e_means (fallback baseline)
  double session_voiced_ = 0.0;

  std::deque<BurstRef> bursts_;
  std::deque<PendingConfirm> pending_confirms_;
  std::set<std::pair<ParticipantId, long long>> sit_aside_turns_;  // (participant, t0 in ms)
  std::set<std::pair<ParticipantId, long long>> confirmed_initiating_;
  std::map<std::pair<ParticipantId, ParticipantId>, double> pair_last_confirm_;
  std::vector<std::pair<double, std::set<ParticipantId>>> recent_coords_;

  std::vector<SchismCue> ready_;
  std::vector<ConfirmDecision> confirm_out_;
  double high_water_ = 0.0;
};

}  // namespace floorsight
