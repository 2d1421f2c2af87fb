#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "floorsight/engine.hpp"
#include "floorsight/simulator.hpp"
#include "floorsight/types.hpp"

namespace floorsight {

struct CorpusStats {
  int floors_count = 0;
  double floors_per_hour = 0;
  double duration_median = 0;
  double duration_min = 0;
  double duration_max = 0;
  double time_weighted_concurrency = 0;
  std::vector<double> durations;  // per floor, emergence order
};

struct PrfScore {
  int truth_count = 0;
  int emitted_count = 0;
  int matched = 0;
  double precision = 1.0;  // reported as 1 with zero_support when nothing was emitted
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_support = false;
};

struct LatencyStats {
  std::vector<double> latencies;  // matched schisms only
  int matched = 0;
  int missed = 0;
  double median = 0;
  double mean = 0;
};

struct EvalReport {
  double pairwise_agreement = 0;
  LatencyStats latency;
  std::map<std::string, PrfScore> cue_prf;  // keyed by truth kind
  CorpusStats stats;
};

// Frame-sampled pairwise co-membership agreement. At each step, pairs where
// both sides are truth-affiliated score 1 when truth and prediction agree on
// same-floor vs not (prediction-unaffiliated counts as "different floor").
// Throws NO_SCORABLE_PAIRS when no step has a scorable pair.
double frame_pairwise_agreement(const std::vector<AffiliationInterval>& truth,
                                const std::vector<AffiliationInterval>& pred,
                                double session_span, double frame = 0.1);

// Matches each truth schism to the earliest unmatched floor-start event in
// [t_resp - 1, t_resp + match_window] whose member set intersects the truth
// pair; latency is event time minus the ground-truth floor start.
LatencyStats detection_latency(const std::vector<InjectedEvent>& truth_schisms,
                               const std::vector<FloorEvent>& events,
                               double match_window = 10.0);

// Floor counts, lifetime spread and time-weighted concurrency of a label set
// (exact boundary sweep for the integral).
CorpusStats corpus_stats(const std::vector<AffiliationInterval>& labels, double session_span);

// Per-kind precision/recall with greedy one-to-one matching by |dt| <= 1 s
// and equal initiator. TOSS_OUT and RETRO truth records match CONFIRM cues;
// other kinds match their own name.
std::map<std::string, PrfScore> cue_prf(const std::vector<InjectedEvent>& injected,
                                        const std::vector<SchismCue>& emitted);

}  // namespace floorsight
