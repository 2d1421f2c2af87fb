#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "floorsight/cues.hpp"
#include "floorsight/turns.hpp"
#include "floorsight/types.hpp"

namespace floorsight {

struct EngineParams {
  double window = 5.0;            // max analysis-segment length
  double decay_half_life = 15.0;  // affinity decay
  double w_align = 1.0;
  double w_overlap = 1.0;
  double w_coord = 0.5;
  double split_threshold = 0.0;   // keep merging clusters while avg affinity >= this
  double merge_threshold = 0.5;   // stricter bar for joining two current floors
  double hysteresis = 4.0;        // a proposal must persist this long
  double retro_horizon = 30.0;    // how far labels may be amended
  double stability_drop = 0.5;
  double stability_window = 10.0;
  double reorder_tolerance = 0.5;

  bool valid() const {
    return window > 0 && decay_half_life > 0 && w_align >= 0 && w_overlap >= 0 && w_coord >= 0 &&
           merge_threshold > split_threshold && hysteresis > 0 && retro_horizon >= window &&
           stability_drop >= 0 && stability_drop <= 1 && stability_window > 0;
  }
};

struct EngineConfig {
  EngineParams engine;
  TurnParams turns;
  DetectorParams detectors;
  bool use_cues = true;       // apply cues to the model (false = turn-taking-only ablation)
  bool run_detectors = true;  // run the internal detector bank (false when cues are replayed)
};

struct FloorEvent {
  enum class Kind { Start, End, Join, Leave };
  Kind kind;
  double t = 0.0;
  FloorId floor;
  std::vector<ParticipantId> participants;  // Start: members; Join/Leave: the mover
};

const char* floor_event_kind_name(FloorEvent::Kind kind);

// One decayed-accumulation step: prev * 2^(-dt/half_life) + score.
double ewma_affinity_step(double prev, double score, double dt, double half_life);

// Greedy average-linkage agglomeration over `clusters` (merged in place).
// Keeps merging the pair with the highest average pairwise affinity while
// that average clears threshold(ci, cj). Returns the merge order.
std::vector<std::pair<size_t, size_t>> agglomerate_clusters(
    std::vector<std::set<ParticipantId>>& clusters,
    const std::function<double(const ParticipantId&, const ParticipantId&)>& affinity,
    const std::function<double(const std::set<ParticipantId>&, const std::set<ParticipantId>&)>&
        threshold);

// Online floor-partition inference. Single-writer: one thread calls ingest,
// snapshots are plain value copies. Feed segments and cues in timestamp
// order (segments keyed by t0); call finish() at end of stream.
//
// Internally the stream is cut into analysis segments ending at turn
// boundaries, or after `window` seconds at the latest. Each boundary updates
// the decayed affinity matrix from pairwise turn-taking features, reclusters,
// and runs partition hysteresis. Cues adjust the model: SIT/ASIDE drop floor
// stability (halving split hysteresis around the initiator), COORD injects
// pair bonuses, CONFIRM splits immediately and back-dates labels to the
// initiating turn onset.
class FloorEngine {
 public:
  FloorEngine(const std::vector<ParticipantId>& participants, EngineConfig config);

  void set_tokens(std::vector<TokenAnnotation> tokens);

  void ingest(const VadSegment& segment);
  void ingest(const SchismCue& cue);
  void finish();

  // Spec operation surface (also reachable through ingest).
  void apply_cue(const SchismCue& cue);
  // Back-date the new floor's labels to the initiating turn onset. Throws
  // STALE when the turn fell out of retro_horizon (start stays at confirm
  // time).
  void retro_relabel(FloorId new_floor, const Turn& initiating_turn);
  // Finalized labels up to finalize_before (must trail now by retro_horizon
  // while the stream is live; after finish() everything is final).
  std::vector<AffiliationInterval> emit_labels(double finalize_before);

  std::vector<FloorEvent> drain_events();
  std::vector<SchismCue> drain_emitted_cues();

  // Snapshots.
  double now() const { return now_; }
  std::map<ParticipantId, FloorId> partition() const;
  std::map<FloorId, std::set<ParticipantId>> floors() const;
  double affinity(const ParticipantId& a, const ParticipantId& b) const;
  double stability(FloorId floor) const;
  bool finished() const { return finished_; }

 private:
  struct Stint {
    FloorId floor;
    double label_t0 = -1.0;  // first oriented turn onset; < 0 until one lands
    double last_turn_end = -1.0;
  };
  struct PendingProposal {
    std::vector<std::set<ParticipantId>> clusters;
    double since = 0.0;
  };

  using Pair = std::pair<ParticipantId, ParticipantId>;
  static Pair make_pair_key(const ParticipantId& a, const ParticipantId& b);

  void advance(double t);
  void run_analysis(double t);
  void update_affinity(double t, const std::vector<PairFeatures>& features);
  std::vector<std::set<ParticipantId>> cluster_floors(double t) const;
  void consider_proposal(double t, std::vector<std::set<ParticipantId>> clusters);
  void adopt_partition(double t, const std::vector<std::set<ParticipantId>>& clusters);
  void apply_confirm(const ConfirmDecision& decision, double t);
  void on_turn_finalized(const Turn& turn);
  void close_stint(const ParticipantId& p, std::optional<double> truncate_at);
  void open_stint(const ParticipantId& p, FloorId floor, double label_t0);
  double last_turn_end_before(const ParticipantId& p, double t) const;
  FloorId fresh_floor();
  void trim(double t);
  bool stability_reduced(const ParticipantId& p, double t) const;

  EngineConfig config_;
  std::vector<ParticipantId> participants_;

  double now_ = 0.0;
  bool finished_ = false;
  double last_analysis_ = 0.0;
  double last_trim_ = 0.0;
  int next_ordinal_ = 1;

  std::map<ParticipantId, SegmentList> history_;
  std::map<ParticipantId, std::vector<VadSegment>> open_turns_;
  std::map<ParticipantId, std::deque<Turn>> recent_turns_;  // within retro_horizon
  std::map<ParticipantId, std::vector<Turn>> segment_turns_;  // finalized since last analysis

  std::map<Pair, double> affinity_;
  std::map<ParticipantId, FloorId> assignment_;
  std::map<ParticipantId, double> reduced_until_;
  std::set<Pair> coord_bonus_pairs_;  // pending for the current analysis segment

  std::optional<PendingProposal> pending_;

  std::map<ParticipantId, Stint> stints_;
  std::vector<AffiliationInterval> closed_;
  std::vector<FloorEvent> events_;
  std::vector<SchismCue> emitted_cues_;

  std::unique_ptr<CueDetectorBank> bank_;
};

}  // namespace floorsight
