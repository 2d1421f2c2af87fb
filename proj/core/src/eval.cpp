#include "floorsight/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "floorsight/errors.hpp"

namespace floorsight {

namespace {

// Affiliation of every participant sampled at time t (interval lookup).
struct LabelIndex {
  std::map<ParticipantId, std::vector<AffiliationInterval>> by_participant;

  explicit LabelIndex(const std::vector<AffiliationInterval>& labels) {
    for (const auto& iv : labels) by_participant[iv.participant].push_back(iv);
    for (auto& [p, ivs] : by_participant) {
      std::sort(ivs.begin(), ivs.end(),
                [](const auto& a, const auto& b) { return a.t0 < b.t0; });
    }
  }

  std::optional<FloorId> at(const ParticipantId& p, double t) const {
    auto it = by_participant.find(p);
    if (it == by_participant.end()) return std::nullopt;
    const auto& ivs = it->second;
    auto pos = std::upper_bound(ivs.begin(), ivs.end(), t,
                                [](double v, const AffiliationInterval& iv) { return v < iv.t0; });
    if (pos == ivs.begin()) return std::nullopt;
    --pos;
    if (t >= pos->t0 && t < pos->t1) return pos->floor;
    return std::nullopt;
  }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

double frame_pairwise_agreement(const std::vector<AffiliationInterval>& truth,
                                const std::vector<AffiliationInterval>& pred,
                                double session_span, double frame) {
  if (frame <= 0) throw Error(ErrorCode::BadArgument, "frame must be positive");
  LabelIndex truth_idx(truth);
  LabelIndex pred_idx(pred);

  std::set<ParticipantId> participants;
  for (const auto& iv : truth) participants.insert(iv.participant);
  std::vector<ParticipantId> ps(participants.begin(), participants.end());

  long long scored = 0, agreed = 0;
  for (double t = 0.5 * frame; t < session_span; t += frame) {
    std::vector<std::pair<size_t, FloorId>> affiliated;
    for (size_t i = 0; i < ps.size(); ++i) {
      if (auto f = truth_idx.at(ps[i], t)) affiliated.push_back({i, *f});
    }
    for (size_t a = 0; a < affiliated.size(); ++a) {
      for (size_t b = a + 1; b < affiliated.size(); ++b) {
        const bool truth_same = affiliated[a].second == affiliated[b].second;
        const auto pa = pred_idx.at(ps[affiliated[a].first], t);
        const auto pb = pred_idx.at(ps[affiliated[b].first], t);
        const bool pred_same = pa && pb && *pa == *pb;
        ++scored;
        if (truth_same == pred_same) ++agreed;
      }
    }
  }
  if (scored == 0) throw Error(ErrorCode::NoScorablePairs, "no truth-affiliated pairs");
  return static_cast<double>(agreed) / static_cast<double>(scored);
}

LatencyStats detection_latency(const std::vector<InjectedEvent>& truth_schisms,
                               const std::vector<FloorEvent>& events,
                               double match_window) {
  if (match_window <= 0) throw Error(ErrorCode::BadArgument, "match_window must be positive");

  std::vector<const FloorEvent*> starts;
  for (const auto& ev : events) {
    if (ev.kind == FloorEvent::Kind::Start) starts.push_back(&ev);
  }
  std::sort(starts.begin(), starts.end(),
            [](const FloorEvent* a, const FloorEvent* b) { return a->t < b->t; });

  LatencyStats out;
  std::set<const FloorEvent*> used;
  for (const auto& schism : truth_schisms) {
    if (!schism.schism) continue;
    const FloorEvent* match = nullptr;
    for (const FloorEvent* ev : starts) {
      if (used.count(ev)) continue;
      if (ev->t < schism.t_resp - 1.0) continue;
      if (ev->t > schism.t_resp + match_window) break;
      std::set<ParticipantId> members(ev->participants.begin(), ev->participants.end());
      bool intersects = members.count(schism.initiator) > 0;
      for (const auto& r : schism.responders) intersects = intersects || members.count(r) > 0;
      if (!intersects) continue;
      match = ev;
      break;
    }
    if (match) {
      used.insert(match);
      out.latencies.push_back(match->t - schism.t_init);
      ++out.matched;
    } else {
      ++out.missed;
    }
  }
  if (!out.latencies.empty()) {
    out.median = median_of(out.latencies);
    double total = 0;
    for (double v : out.latencies) total += v;
    out.mean = total / static_cast<double>(out.latencies.size());
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<AffiliationInterval>& labels, double session_span) {
  CorpusStats stats;
  std::map<int, std::pair<double, double>> floor_span;  // ordinal -> [first, last]
  std::map<int, std::vector<std::pair<double, double>>> floor_intervals;
  for (const auto& iv : labels) {
    auto [it, fresh] = floor_span.try_emplace(iv.floor.ordinal, iv.t0, iv.t1);
    if (!fresh) {
      it->second.first = std::min(it->second.first, iv.t0);
      it->second.second = std::max(it->second.second, iv.t1);
    }
    floor_intervals[iv.floor.ordinal].push_back({iv.t0, iv.t1});
  }
  stats.floors_count = static_cast<int>(floor_span.size());
  if (session_span > 0) stats.floors_per_hour = stats.floors_count / (session_span / 3600.0);

  for (const auto& [ord, span] : floor_span) stats.durations.push_back(span.second - span.first);
  if (!stats.durations.empty()) {
    stats.duration_median = median_of(stats.durations);
    stats.duration_min = *std::min_element(stats.durations.begin(), stats.durations.end());
    stats.duration_max = *std::max_element(stats.durations.begin(), stats.durations.end());
  }

  // Exact integral of the active-floor count: union the member intervals per
  // floor, then sweep all floors' active spans.
  std::vector<std::pair<double, int>> deltas;
  for (auto& [ord, ivs] : floor_intervals) {
    std::sort(ivs.begin(), ivs.end());
    double lo = 0, hi = -1;
    for (const auto& [a, b] : ivs) {
      if (hi < a) {
        if (hi > lo) deltas.push_back({lo, +1}), deltas.push_back({hi, -1});
        lo = a;
        hi = b;
      } else {
        hi = std::max(hi, b);
      }
    }
    if (hi > lo) {
      deltas.push_back({lo, +1});
      deltas.push_back({hi, -1});
    }
  }
  std::sort(deltas.begin(), deltas.end());
  double integral = 0, prev_t = 0;
  int active = 0;
  for (const auto& [t, d] : deltas) {
    integral += active * (t - prev_t);
    active += d;
    prev_t = t;
  }
  if (session_span > 0) stats.time_weighted_concurrency = integral / session_span;
  return stats;
}

std::map<std::string, PrfScore> cue_prf(const std::vector<InjectedEvent>& injected,
                                        const std::vector<SchismCue>& emitted) {
  auto cue_kind_for_truth = [](const std::string& kind) -> std::string {
    if (kind == "TOSS_OUT" || kind == "RETRO") return "CONFIRM";
    return kind;
  };

  std::map<std::string, PrfScore> out;
  std::map<std::string, std::vector<size_t>> emitted_by_kind;
  for (size_t i = 0; i < emitted.size(); ++i) {
    emitted_by_kind[cue_kind_name(emitted[i].kind)].push_back(i);
  }
  for (const auto& ev : injected) out[ev.kind].truth_count += 1;

  // Count every emitted cue against the truth kinds it can match (CONFIRM
  // splits its denominator across TOSS_OUT and RETRO jointly below).
  std::set<size_t> matched_cues;
  std::map<std::string, int> matched_truth;
  struct Cand {
    double dt;
    size_t truth_idx;
    size_t cue_idx;
  };
  std::vector<Cand> cands;
  for (size_t ti = 0; ti < injected.size(); ++ti) {
    const auto& ev = injected[ti];
    const std::string want = cue_kind_for_truth(ev.kind);
    auto it = emitted_by_kind.find(want);
    if (it == emitted_by_kind.end()) continue;
    for (size_t ci : it->second) {
      const auto& cue = emitted[ci];
      if (cue.initiator != ev.initiator) continue;
      const double dt = std::abs(cue.t - ev.t);
      if (dt <= 1.0) cands.push_back({dt, ti, ci});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dt != b.dt) return a.dt < b.dt;
    if (a.truth_idx != b.truth_idx) return a.truth_idx < b.truth_idx;
    return a.cue_idx < b.cue_idx;
  });
  std::set<size_t> used_truth;
  for (const auto& c : cands) {
    if (used_truth.count(c.truth_idx) || matched_cues.count(c.cue_idx)) continue;
    used_truth.insert(c.truth_idx);
    matched_cues.insert(c.cue_idx);
    out[injected[c.truth_idx].kind].matched += 1;
  }

  // Emitted counts: each cue kind contributes to the truth kinds that map to
  // it; CONFIRM cues are shared between TOSS_OUT and RETRO, so precision for
  // those is computed jointly on the CONFIRM pool.
  std::map<std::string, int> emitted_pool;
  for (auto& [kind, score] : out) {
    const std::string want = cue_kind_for_truth(kind);
    auto it = emitted_by_kind.find(want);
    score.emitted_count = it == emitted_by_kind.end() ? 0 : static_cast<int>(it->second.size());
  }
  // Pool-level precision: matched cues of the pool / emitted in the pool.
  std::map<std::string, int> pool_matched;
  for (size_t ci : matched_cues) pool_matched[cue_kind_name(emitted[ci].kind)] += 1;

  for (auto& [kind, score] : out) {
    const std::string want = cue_kind_for_truth(kind);
    const int pool_emitted = score.emitted_count;
    const int pm = pool_matched.count(want) ? pool_matched[want] : 0;
    if (pool_emitted == 0) {
      score.precision = 1.0;
      score.zero_support = true;
    } else {
      score.precision = static_cast<double>(pm) / pool_emitted;
    }
    score.recall = score.truth_count > 0
                       ? static_cast<double>(score.matched) / score.truth_count
                       : 0.0;
    score.f1 = (score.precision + score.recall) > 0
                   ? 2 * score.precision * score.recall / (score.precision + score.recall)
                   : 0.0;
  }
  return out;
}

}  // namespace floorsight
