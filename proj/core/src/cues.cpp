#include "floorsight/cues.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <utility>

#include "floorsight/errors.hpp"

namespace floorsight {

namespace {

constexpr double kConfirmLookahead = 10.0;  // seconds scanned past a response onset
constexpr double kConfirmMinCospeech = 2.0;
constexpr double kConfirmStrength = 0.8;
constexpr double kPairOverlapGuard = 0.35;  // a responsive pair must not talk over itself
constexpr double kEnvelopeHop = 0.01;
constexpr double kEnvelopePad = 0.2;
constexpr double kMinBaselineSpeech = 5.0;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

long long ms_key(double t) { return std::llround(t * 1000.0); }

double envelope_at(const SegmentList& segments, double t) {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const VadSegment& s) { return v < s.t0; });
  if (it != segments.begin()) {
    --it;
    if (t >= it->t0 && t < it->t1) return it->e_mean;
  }
  return -120.0;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx < 1e-9 || syy < 1e-9) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double mean_envelope_correlation(const SessionStreams& streams, TimeWindow span) {
  if (streams.size() < 2 || span.length() <= 0) return 0.0;
  const size_t n = std::max<size_t>(2, static_cast<size_t>(std::lround(span.length() / kEnvelopeHop)));
  std::vector<std::vector<double>> env(streams.size(), std::vector<double>(n));
  for (size_t s = 0; s < streams.size(); ++s) {
    for (size_t k = 0; k < n; ++k) {
      env[s][k] = envelope_at(streams[s].segments, span.t0 + (k + 0.5) * kEnvelopeHop);
    }
  }
  double total = 0;
  int pairs = 0;
  for (size_t i = 0; i < env.size(); ++i) {
    for (size_t j = i + 1; j < env.size(); ++j) {
      total += pearson(env[i], env[j]);
      ++pairs;
    }
  }
  return total / pairs;
}

std::optional<SchismCue> detect_sit_cue(const Turn& turn,
                                        const std::vector<TokenAnnotation>& tokens,
                                        const DetectorParams& params) {
  const double limit = turn.t0 + params.sit_initial_window;
  std::map<std::string, int> address_counts;
  for (const auto& tok : tokens) {
    if (!tok.is_address) continue;
    if (tok.participant != turn.participant) continue;
    if (tok.t0 < turn.t0 || tok.t0 > limit || tok.t0 >= turn.t1) continue;
    address_counts[lower(tok.text)] += 1;
  }
  if (address_counts.empty()) return std::nullopt;

  bool repeated = false;
  for (const auto& [text, count] : address_counts) {
    if (count >= 2) repeated = true;
  }
  SchismCue cue;
  cue.kind = CueKind::Sit;
  cue.t = turn.t0;
  cue.initiator = turn.participant;
  cue.strength = 0.6 + (repeated ? 0.2 : 0.0) + (turn.onset_in_clear ? 0.2 : 0.0);
  return cue;
}

std::optional<SchismCue> detect_aside_cue(const Turn& turn,
                                          std::optional<double> speaker_baseline,
                                          const DetectorParams& params) {
  if (!speaker_baseline) {
    throw Error(ErrorCode::NoBaseline, "speaker " + turn.participant + " has < 5 s prior speech");
  }
  if (turn.onset_in_clear) return std::nullopt;
  const double drop = *speaker_baseline - turn.e_mean;
  if (drop < params.aside_delta) return std::nullopt;

  SchismCue cue;
  cue.kind = CueKind::Aside;
  cue.t = turn.t0;
  cue.initiator = turn.participant;
  cue.strength = std::min(1.0, (drop - params.aside_delta) / 6.0 + 0.5);
  return cue;
}

namespace {

struct BurstGroup {
  std::vector<VadSegment> bursts;  // one per participant, onset order
};

std::optional<SchismCue> evaluate_burst_group(const BurstGroup& group,
                                              const SessionStreams& streams,
                                              const DetectorParams& params) {
  if (static_cast<int>(group.bursts.size()) < params.coord_min_participants) return std::nullopt;

  double min_t0 = group.bursts.front().t0, max_t1 = 0;
  for (const auto& b : group.bursts) max_t1 = std::max(max_t1, b.t1);

  std::set<ParticipantId> members;
  for (const auto& b : group.bursts) members.insert(b.participant);
  SessionStreams member_streams;
  for (const auto& s : streams) {
    if (members.count(s.participant)) member_streams.push_back(s);
  }

  const double corr = mean_envelope_correlation(
      member_streams, {min_t0 - kEnvelopePad, max_t1 + kEnvelopePad});
  if (corr < params.coord_corr_min) return std::nullopt;

  SchismCue cue;
  cue.kind = CueKind::Coord;
  cue.t = min_t0;
  cue.initiator = group.bursts.front().participant;
  for (const auto& m : members) {
    if (m != cue.initiator) cue.responders.insert(m);
  }
  cue.strength = std::clamp(corr, 0.0, 1.0);
  return cue;
}

// Bursts with onsets within coord_onset_tau of the anchor, earliest burst
// per participant.
BurstGroup gather_group(const std::vector<VadSegment>& bursts, size_t anchor,
                        const DetectorParams& params) {
  BurstGroup group;
  std::set<ParticipantId> seen;
  const double t0 = bursts[anchor].t0;
  for (size_t j = anchor; j < bursts.size() && bursts[j].t0 <= t0 + params.coord_onset_tau; ++j) {
    if (seen.insert(bursts[j].participant).second) group.bursts.push_back(bursts[j]);
  }
  return group;
}

}  // namespace

std::optional<SchismCue> detect_coordinated_action(const SessionStreams& streams,
                                                   TimeWindow window,
                                                   const DetectorParams& params) {
  if (window.length() < params.coord_max_burst) {
    throw Error(ErrorCode::BadArgument, "window shorter than coord_max_burst");
  }
  std::vector<VadSegment> bursts;
  for (const auto& stream : streams) {
    for (const auto& seg : stream.segments) {
      if (seg.duration() <= params.coord_max_burst && seg.t0 >= window.t0 && seg.t0 < window.t1) {
        bursts.push_back(seg);
      }
    }
  }
  std::sort(bursts.begin(), bursts.end(), [](const VadSegment& a, const VadSegment& b) {
    if (a.t0 != b.t0) return a.t0 < b.t0;
    return a.participant < b.participant;
  });
  for (size_t i = 0; i < bursts.size(); ++i) {
    if (auto cue = evaluate_burst_group(gather_group(bursts, i, params), streams, params)) {
      return cue;
    }
  }
  return std::nullopt;
}

std::optional<SchismCue> detect_schism_confirmation(const Turn& candidate_initiating,
                                                    const std::vector<Turn>& subsequent,
                                                    const SessionStreams& ongoing_floor_activity,
                                                    const DetectorParams& params) {
  const Turn* response = nullptr;
  for (const auto& turn : subsequent) {
    if (turn.participant == candidate_initiating.participant) continue;
    if (turn.t0 <= candidate_initiating.t0) continue;
    if (turn.t0 > candidate_initiating.t1 + params.confirm_max_gap) continue;
    if (!response || turn.t0 < response->t0) response = &turn;
  }
  if (!response) return std::nullopt;

  // Pair activity from the initiating turn plus both parties' later turns.
  std::map<ParticipantId, SegmentList> pair_segments;
  auto collect = [&](const Turn& t) {
    auto& list = pair_segments[t.participant];
    list.insert(list.end(), t.segments.begin(), t.segments.end());
  };
  collect(candidate_initiating);
  for (const auto& turn : subsequent) {
    if (turn.participant == candidate_initiating.participant ||
        turn.participant == response->participant) {
      collect(turn);
    }
  }
  SessionStreams pair_streams;
  for (auto& [p, segs] : pair_segments) {
    std::sort(segs.begin(), segs.end(),
              [](const VadSegment& a, const VadSegment& b) { return a.t0 < b.t0; });
    pair_streams.push_back({p, std::move(segs)});
  }

  const TimeWindow span{response->t0, response->t0 + kConfirmLookahead};
  const SegmentList pair_union = union_voiced(pair_streams);
  const SegmentList others_union = union_voiced(ongoing_floor_activity);
  if (cospeech_seconds(pair_union, others_union, span) < kConfirmMinCospeech) return std::nullopt;

  SchismCue cue;
  cue.kind = CueKind::Confirm;
  cue.t = response->t0;
  cue.initiator = candidate_initiating.participant;
  cue.responders = {response->participant};
  cue.strength = kConfirmStrength;
  return cue;
}

void BaselineTracker::add_turn(const Turn& turn) {
  auto& hist = history_[turn.participant];
  hist.push_back({turn.t1, turn.e_mean, turn.duration()});
  while (!hist.empty() && hist.front().t1 < turn.t1 - horizon_) hist.pop_front();
}

std::optional<double> BaselineTracker::baseline(const ParticipantId& speaker, double now) const {
  auto it = history_.find(speaker);
  if (it == history_.end()) return std::nullopt;
  std::vector<double> energies;
  double voiced = 0;
  for (const auto& e : it->second) {
    if (e.t1 <= now && e.t1 >= now - horizon_) {
      energies.push_back(e.e_mean);
      voiced += e.dur;
    }
  }
  if (voiced < kMinBaselineSpeech || energies.empty()) return std::nullopt;
  const size_t mid = energies.size() / 2;
  std::nth_element(energies.begin(), energies.begin() + mid, energies.end());
  double median = energies[mid];
  if (energies.size() % 2 == 0) {
    std::nth_element(energies.begin(), energies.begin() + mid - 1, energies.begin() + mid);
    median = 0.5 * (median + energies[mid - 1]);
  }
  return median;
}

CueDetectorBank::CueDetectorBank(DetectorParams params, TurnParams turn_params)
    : params_(params), turn_params_(turn_params), baselines_(params.baseline_horizon) {
  if (!params_.valid()) throw Error(ErrorCode::BadArgument, "invalid detector params");
  floor_lookup_ = [this](const ParticipantId&, double) { return seen_; };
}

void CueDetectorBank::set_tokens(std::vector<TokenAnnotation> tokens) {
  tokens_ = std::move(tokens);
  std::sort(tokens_.begin(), tokens_.end(),
            [](const TokenAnnotation& a, const TokenAnnotation& b) { return a.t0 < b.t0; });
}

void CueDetectorBank::set_floor_lookup(FloorMembersFn lookup) { floor_lookup_ = std::move(lookup); }

void CueDetectorBank::add_segment(const VadSegment& segment) {
  seen_.insert(segment.participant);
  history_[segment.participant].push_back(segment);
  high_water_ = std::max(high_water_, segment.t0);

  auto& open = open_turns_[segment.participant];
  if (!open.empty() && segment.t0 - open.back().t1 >= turn_params_.merge_gap) {
    Turn turn = merge_into_turn(std::move(open));
    open.clear();
    on_turn_finalized(turn);
  }
  open.push_back(segment);

  if (segment.duration() <= params_.coord_max_burst) {
    bursts_.push_back({segment, false});
  }
}

void CueDetectorBank::finalize_ready_turns(double now, bool flush) {
  // Global t0 ordering means a turn whose trailing gap has elapsed can no
  // longer grow.
  for (auto& [participant, open] : open_turns_) {
    if (open.empty()) continue;
    if (flush || now - open.back().t1 >= turn_params_.merge_gap) {
      Turn turn = merge_into_turn(std::move(open));
      open.clear();
      on_turn_finalized(turn);
    }
  }
}

void CueDetectorBank::on_turn_finalized(const Turn& raw) {
  Turn turn = raw;
  {
    SessionStreams streams;
    for (const auto& [p, segs] : history_) streams.push_back({p, segs});
    turn.onset_in_clear = !other_voiced_at(streams, turn.participant, turn.t0);
  }

  // SIT: address token in the turn-initial window.
  std::vector<TokenAnnotation> turn_tokens;
  {
    auto lo = std::lower_bound(tokens_.begin(), tokens_.end(), turn.t0 - 1e-9,
                               [](const TokenAnnotation& tok, double v) { return tok.t0 < v; });
    for (auto it = lo; it != tokens_.end() && it->t0 <= turn.t1; ++it) {
      if (it->participant == turn.participant) turn_tokens.push_back(*it);
    }
  }
  bool cued_initiating = false;
  if (auto cue = detect_sit_cue(turn, turn_tokens, params_)) {
    ready_.push_back(*cue);
    cued_initiating = true;
  }

  // ASIDE: subdued delivery relative to the speaker's own running baseline,
  // with the session-wide median as fallback.
  if (!cued_initiating) {
    std::optional<double> baseline = baselines_.baseline(turn.participant, turn.t0);
    if (!baseline && session_voiced_ >= kMinBaselineSpeech && !session_energies_.empty()) {
      std::vector<double> copy = session_energies_;
      const size_t mid = copy.size() / 2;
      std::nth_element(copy.begin(), copy.begin() + mid, copy.end());
      baseline = copy[mid];
    }
    if (baseline) {
      if (auto cue = detect_aside_cue(turn, baseline, params_)) {
        ready_.push_back(*cue);
        cued_initiating = true;
      }
    }
  }
  if (cued_initiating) sit_aside_turns_.insert({turn.participant, ms_key(turn.t0)});

  baselines_.add_turn(turn);
  session_energies_.push_back(turn.e_mean);
  session_voiced_ += turn.duration();

  // Treat this turn as a potential schism-confirming response: find the best
  // initiating candidate among other participants' recent turns (an
  // overlapped turn first, then nearest adjacency).
  const Turn* candidate = nullptr;
  bool candidate_overlap = false;
  for (const auto& [p, turns] : recent_turns_) {
    if (p == turn.participant) continue;
    for (const auto& u : turns) {
      if (turn.t0 <= u.t0 || turn.t0 > u.t1 + params_.confirm_max_gap) continue;
      const bool overlap = turn.t0 < u.t1;
      if (!candidate) {
        candidate = &u;
        candidate_overlap = overlap;
        continue;
      }
      if (overlap != candidate_overlap) {
        if (overlap) {
          candidate = &u;
          candidate_overlap = true;
        }
        continue;
      }
      if (overlap) {
        if (u.t0 > candidate->t0) candidate = &u;
      } else {
        if (turn.t0 - u.t1 < turn.t0 - candidate->t1) candidate = &u;
      }
    }
  }
  if (candidate) {
    const auto key = std::make_pair(candidate->participant, ms_key(candidate->t0));
    const auto pair_key = std::minmax(candidate->participant, turn.participant);
    auto pair_it = pair_last_confirm_.find(pair_key);
    const bool pair_recent =
        pair_it != pair_last_confirm_.end() && turn.t0 - pair_it->second < kConfirmLookahead;
    bool already_pending = confirmed_initiating_.count(key) > 0;
    for (const auto& pc : pending_confirms_) {
      if (pc.initiating.participant == candidate->participant &&
          ms_key(pc.initiating.t0) == key.second) {
        already_pending = true;
      }
    }
    const std::set<ParticipantId> members = floor_lookup_(candidate->participant, turn.t0);
    if (!already_pending && !pair_recent && members.count(turn.participant) &&
        members.size() >= 3) {
      PendingConfirm pc;
      pc.initiating = *candidate;
      pc.response = turn;
      pc.cued_as_sit_or_aside = sit_aside_turns_.count(key) > 0;
      pc.deadline = turn.t0 + kConfirmLookahead;
      pc.others = members;
      pc.others.erase(candidate->participant);
      pc.others.erase(turn.participant);
      pending_confirms_.push_back(std::move(pc));
    }
  }

  recent_turns_[turn.participant].push_back(turn);
}

void CueDetectorBank::detect_coord_groups(double now, bool flush) {
  std::vector<VadSegment> open_bursts;
  for (size_t i = 0; i < bursts_.size(); ++i) {
    if (bursts_[i].consumed) continue;
    // Group membership is fixed once onsets past t0+tau have arrived; the
    // envelope needs data out to the last burst end plus padding.
    const double anchor_t0 = bursts_[i].segment.t0;
    if (!flush && now <= anchor_t0 + params_.coord_onset_tau) break;

    std::vector<VadSegment> window;
    std::vector<size_t> indices;
    std::set<ParticipantId> seen;
    double max_t1 = bursts_[i].segment.t1;
    for (size_t j = i; j < bursts_.size() && bursts_[j].segment.t0 <= anchor_t0 + params_.coord_onset_tau;
         ++j) {
      if (bursts_[j].consumed) continue;
      if (!seen.insert(bursts_[j].segment.participant).second) continue;
      window.push_back(bursts_[j].segment);
      indices.push_back(j);
      max_t1 = std::max(max_t1, bursts_[j].segment.t1);
    }
    if (!flush && now < max_t1 + kEnvelopePad) continue;

    BurstGroup group;
    group.bursts = window;
    SessionStreams streams;
    for (const auto& p : seen) streams.push_back({p, history_.at(p)});
    if (auto cue = evaluate_burst_group(group, streams, params_)) {
      ready_.push_back(*cue);
      std::set<ParticipantId> members = cue->responders;
      members.insert(cue->initiator);
      recent_coords_.push_back({cue->t, std::move(members)});
      for (size_t idx : indices) bursts_[idx].consumed = true;
    } else {
      bursts_[i].consumed = true;  // anchor cannot head a group later either
    }
  }
  while (!bursts_.empty() && bursts_.front().consumed) bursts_.pop_front();
}

void CueDetectorBank::resolve_confirms(double now, bool flush) {
  std::deque<PendingConfirm> keep;
  for (auto& pc : pending_confirms_) {
    if (!flush && now < pc.deadline) {
      keep.push_back(std::move(pc));
      continue;
    }
    const TimeWindow span{pc.response.t0, pc.deadline};

    // Responses that were part of a coordinated action are affiliation
    // displays, not schism confirmations.
    bool coord_response = false;
    for (const auto& [t, members] : recent_coords_) {
      if (std::abs(t - pc.response.t0) <= 1.5 && members.count(pc.response.participant)) {
        coord_response = true;
      }
    }
    if (coord_response) continue;

    const SessionStreams pair = streams_for({pc.initiating.participant, pc.response.participant});
    const SessionStreams others = streams_for(pc.others);

    const double sustained = cospeech_seconds(union_voiced(pair), union_voiced(others), span);
    if (sustained < kConfirmMinCospeech) continue;

    // The pair must run its own turn-taking system: heavy pair-internal
    // overlap means these are voices from two different floors.
    const double pair_co = cospeech_seconds(pair[0].segments, pair[1].segments, span);
    const double va = voiced_seconds(pair[0].segments, span.t0, span.t1);
    const double vb = voiced_seconds(pair[1].segments, span.t0, span.t1);
    const double denom = std::min(va, vb);
    if (denom > 0 && pair_co / denom >= kPairOverlapGuard) continue;

    const auto key = std::make_pair(pc.initiating.participant, ms_key(pc.initiating.t0));
    if (confirmed_initiating_.count(key)) continue;
    confirmed_initiating_.insert(key);
    pair_last_confirm_[std::minmax(pc.initiating.participant, pc.response.participant)] =
        pc.response.t0;

    if (!pc.cued_as_sit_or_aside) {
      SchismCue cue;
      cue.kind = CueKind::Confirm;
      cue.t = pc.response.t0;
      cue.initiator = pc.initiating.participant;
      cue.responders = {pc.response.participant};
      cue.strength = kConfirmStrength;
      ready_.push_back(cue);
    }
    ConfirmDecision decision;
    decision.initiating = pc.initiating;
    decision.responder = pc.response.participant;
    decision.t_response = pc.response.t0;
    decision.cued_as_sit_or_aside = pc.cued_as_sit_or_aside;
    confirm_out_.push_back(std::move(decision));
  }
  pending_confirms_ = std::move(keep);
}

SessionStreams CueDetectorBank::streams_for(const std::set<ParticipantId>& include) const {
  SessionStreams out;
  for (const auto& p : include) {
    auto it = history_.find(p);
    if (it != history_.end()) out.push_back({p, it->second});
  }
  return out;
}

std::vector<SchismCue> CueDetectorBank::poll(double now) {
  high_water_ = std::max(high_water_, now);
  finalize_ready_turns(now, false);
  detect_coord_groups(now, false);
  resolve_confirms(now, false);
  std::sort(ready_.begin(), ready_.end(), [](const SchismCue& a, const SchismCue& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.initiator < b.initiator;
  });
  return std::exchange(ready_, {});
}

std::vector<SchismCue> CueDetectorBank::finish() {
  finalize_ready_turns(high_water_, true);
  detect_coord_groups(high_water_, true);
  resolve_confirms(high_water_, true);
  std::sort(ready_.begin(), ready_.end(), [](const SchismCue& a, const SchismCue& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.initiator < b.initiator;
  });
  return std::exchange(ready_, {});
}

std::vector<ConfirmDecision> CueDetectorBank::drain_confirms() {
  return std::exchange(confirm_out_, {});
}

void CueDetectorBank::trim(double before) {
  for (auto& [p, segs] : history_) {
    auto it = std::lower_bound(segs.begin(), segs.end(), before,
                               [](const VadSegment& s, double v) { return s.t1 < v; });
    segs.erase(segs.begin(), it);
  }
  for (auto& [p, turns] : recent_turns_) {
    while (!turns.empty() && turns.front().t1 < before) turns.pop_front();
  }
  std::erase_if(recent_coords_, [&](const auto& rc) { return rc.first < before; });
  std::erase_if(sit_aside_turns_, [&](const auto& k) { return k.second < ms_key(before); });
  std::erase_if(confirmed_initiating_, [&](const auto& k) { return k.second < ms_key(before); });
  std::erase_if(pair_last_confirm_, [&](const auto& kv) { return kv.second < before; });
}

}  // namespace floorsight
