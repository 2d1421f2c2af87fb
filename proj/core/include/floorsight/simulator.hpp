#pragma once

#include <string>
#include <vector>

#include "floorsight/turns.hpp"
#include "floorsight/types.hpp"
#include "floorsight/vad.hpp"
#include "floorsight/wav.hpp"

namespace floorsight {

struct SimPreset {
  std::string name;
  int participants = 9;
  double floors_per_hour_lo = 0;  // accepted realized range (rejection band)
  double floors_per_hour_hi = 0;
  double median_floor_duration = 0;  // lognormal median of floor lifetimes
  double floor_duration_sigma = 0;   // lognormal sigma (sets the mean, hence concurrency)
  double floor_duration_cap = 1200;
  double sit_fraction = 0.176;
  int max_concurrent_floors = 4;
  double coord_rate = 0.7;   // choral events per minute
  double aside_rate = 0.3;   // marginal (unanswered) asides per minute
  double turn_median = 2.0;  // lognormal median of turn lengths
  double turn_sigma = 0.45;
  double gap_mean = 0.2;  // inter-turn gap, Normal truncated at -0.3
  double gap_sd = 0.15;
  double speech_level_mean = -20.0;  // per-participant base, dBFS
  double speech_level_sd = 3.0;
  double aside_drop = 12.0;     // dB below the producer's base level
  double migration_rate = 0.2;  // single-participant floor moves per minute
  double hazard_boost = 1.08;   // inflates the schism hazard before rejection

  bool valid() const {
    return participants >= 2 && max_concurrent_floors >= 1 && floors_per_hour_hi > 0 &&
           median_floor_duration > 0 && sit_fraction >= 0 && sit_fraction <= 1;
  }
};

// The self-reported truth record kind (what the event really was), vs the
// detector-side CueKind it should be matched against.
struct InjectedEvent {
  std::string kind;  // SIT | TOSS_OUT | ASIDE | RETRO | COORD
  double t = 0;      // matching time: what a correct detector would stamp
  double t_init = 0; // initiating turn onset (ground-truth floor start)
  double t_resp = 0; // response onset (0 when unanswered)
  ParticipantId initiator;
  std::vector<ParticipantId> responders;
  bool schism = false;  // whether a new floor resulted
};

struct GroundTruth {
  std::vector<AffiliationInterval> labels;
  std::vector<InjectedEvent> injected;
  double session_span = 0;
};

struct SimOutput {
  std::vector<ParticipantId> participants;
  SessionStreams segments;
  std::vector<TokenAnnotation> tokens;
  GroundTruth truth;
  std::vector<TimeWindow> coord_spans;  // spans covered by choral events
  uint64_t seed = 0;
  std::string preset;
};

// Named presets calibrated to per-session floor counts, lifetime medians and
// a ~1.79 time-weighted floor concurrency. Throws UNKNOWN_PRESET.
SimPreset preset(const std::string& name);

// Deterministic session generator: one initial floor of everyone, schisms by
// a hazard process (kind mix: SIT with sit_fraction, else toss-out / aside /
// retro-sequence uniformly), lognormal floor lifetimes ending in merges,
// per-floor turn rotation, choral bursts, and marginal asides. Sessions are
// re-drawn (derived sub-seeds) until the realized floors/hour lands in the
// preset band.
SimOutput simulate_session(const SimPreset& preset, double duration, uint64_t seed);

// Rectangular energy envelope of one stream sampled at `hop` over [0, span).
std::vector<EnergyFrame> rectangular_frames(const SegmentList& segments, double hop, double span);

// Tone-burst rendering of one stream (sine bursts at the segment energies),
// for exercising the WAV-in VAD path end to end.
WavData synthesize_tone_track(const SegmentList& segments, uint32_t rate, double span,
                              double tone_hz);

}  // namespace floorsight
