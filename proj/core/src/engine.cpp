#include "floorsight/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "floorsight/errors.hpp"

namespace floorsight {

const char* floor_event_kind_name(FloorEvent::Kind kind) {
  switch (kind) {
    case FloorEvent::Kind::Start: return "floor_start";
    case FloorEvent::Kind::End: return "floor_end";
    case FloorEvent::Kind::Join: return "join";
    case FloorEvent::Kind::Leave: return "leave";
  }
  return "unknown";
}

double ewma_affinity_step(double prev, double score, double dt, double half_life) {
  return prev * std::exp2(-dt / half_life) + score;
}

std::vector<std::pair<size_t, size_t>> agglomerate_clusters(
    std::vector<std::set<ParticipantId>>& clusters,
    const std::function<double(const ParticipantId&, const ParticipantId&)>& affinity,
    const std::function<double(const std::set<ParticipantId>&, const std::set<ParticipantId>&)>&
        threshold) {
  std::vector<std::pair<size_t, size_t>> merges;
  auto average = [&](const std::set<ParticipantId>& a, const std::set<ParticipantId>& b) {
    double total = 0;
    int n = 0;
    for (const auto& pa : a) {
      for (const auto& pb : b) {
        total += affinity(pa, pb);
        ++n;
      }
    }
    return n > 0 ? total / n : 0.0;
  };

  while (clusters.size() > 1) {
    double best = -std::numeric_limits<double>::infinity();
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < clusters.size(); ++i) {
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        const double avg = average(clusters[i], clusters[j]);
        if (avg > best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < threshold(clusters[bi], clusters[bj])) break;
    merges.emplace_back(bi, bj);
    clusters[bi].insert(clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<long>(bj));
  }
  return merges;
}

FloorEngine::Pair FloorEngine::make_pair_key(const ParticipantId& a, const ParticipantId& b) {
  return a < b ? Pair{a, b} : Pair{b, a};
}

FloorEngine::FloorEngine(const std::vector<ParticipantId>& participants, EngineConfig config)
    : config_(std::move(config)), participants_(participants) {
  if (participants_.size() < 2) {
    throw Error(ErrorCode::TooFewParticipants, "floor tracking needs >= 2 participants");
  }
  if (!config_.engine.valid()) throw Error(ErrorCode::BadArgument, "invalid engine params");
  std::sort(participants_.begin(), participants_.end());
  for (size_t i = 0; i < participants_.size(); ++i) {
    if (!is_valid_participant_id(participants_[i]) ||
        (i > 0 && participants_[i] == participants_[i - 1])) {
      throw Error(ErrorCode::BadArgument, "bad participant id: " + participants_[i]);
    }
  }

  const FloorId initial{next_ordinal_++};
  for (const auto& p : participants_) assignment_[p] = initial;
  events_.push_back({FloorEvent::Kind::Start, 0.0, initial, participants_});

  if (config_.run_detectors) {
    bank_ = std::make_unique<CueDetectorBank>(config_.detectors, config_.turns);
    bank_->set_floor_lookup([this](const ParticipantId& p, double) {
      std::set<ParticipantId> members;
      auto it = assignment_.find(p);
      if (it == assignment_.end()) return members;
      for (const auto& [q, f] : assignment_) {
        if (f == it->second) members.insert(q);
      }
      return members;
    });
  }
}

void FloorEngine::set_tokens(std::vector<TokenAnnotation> tokens) {
  if (bank_) bank_->set_tokens(std::move(tokens));
}

void FloorEngine::ingest(const VadSegment& segment) {
  if (finished_) throw Error(ErrorCode::BadArgument, "stream already finished");
  if (!assignment_.count(segment.participant)) {
    throw Error(ErrorCode::BadArgument, "unknown participant " + segment.participant);
  }
  if (segment.t1 <= segment.t0) throw Error(ErrorCode::InvalidSegments, "t1 <= t0");
  if (segment.t0 < now_ - config_.engine.reorder_tolerance) {
    throw Error(ErrorCode::OutOfOrder, "segment at " + std::to_string(segment.t0) +
                                           " behind high water " + std::to_string(now_));
  }

  auto& hist = history_[segment.participant];
  if (!hist.empty() && segment.t0 < hist.back().t1) {
    throw Error(ErrorCode::InvalidSegments,
                "overlapping segments for " + segment.participant);
  }
  hist.push_back(segment);

  auto& open = open_turns_[segment.participant];
  if (!open.empty() && segment.t0 - open.back().t1 >= config_.turns.merge_gap) {
    Turn turn = merge_into_turn(std::move(open));
    open.clear();
    on_turn_finalized(turn);
  }
  open.push_back(segment);

  if (bank_) bank_->add_segment(segment);
  advance(std::max(now_, segment.t0));
}

void FloorEngine::ingest(const SchismCue& cue) {
  if (finished_) throw Error(ErrorCode::BadArgument, "stream already finished");
  if (cue.t < now_ - config_.engine.reorder_tolerance) {
    throw Error(ErrorCode::OutOfOrder, "cue behind high water");
  }
  advance(std::max(now_, cue.t));
  if (config_.use_cues) apply_cue(cue);
}

void FloorEngine::advance(double t) {
  now_ = std::max(now_, t);

  // Close turns whose trailing gap has elapsed (input is t0-ordered, so they
  // cannot grow further).
  for (auto& [p, open] : open_turns_) {
    if (!open.empty() && now_ - open.back().t1 >= config_.turns.merge_gap) {
      Turn turn = merge_into_turn(std::move(open));
      open.clear();
      on_turn_finalized(turn);
    }
  }

  if (bank_) {
    for (auto& cue : bank_->poll(now_)) {
      emitted_cues_.push_back(cue);
      // CONFIRM records ride along with drain_confirms(); the rest feed the
      // model directly.
      if (config_.use_cues && cue.kind != CueKind::Confirm) apply_cue(cue);
    }
    for (auto& decision : bank_->drain_confirms()) {
      if (config_.use_cues) apply_confirm(decision, now_);
    }
  }

  bool boundary = false;
  for (auto& [p, turns] : segment_turns_) {
    if (!turns.empty()) boundary = true;
  }
  if (boundary || now_ - last_analysis_ >= config_.engine.window) {
    run_analysis(now_);
  }

  if (now_ - last_trim_ > 10.0) {
    trim(now_);
    last_trim_ = now_;
  }
}

void FloorEngine::run_analysis(double t) {
  if (t <= last_analysis_) {
    segment_turns_.clear();
    return;
  }
  const double dt = t - last_analysis_;
  const TimeWindow span{std::max(last_analysis_, t - config_.engine.window), t};

  SessionStreams streams;
  streams.reserve(history_.size());
  for (const auto& [p, segs] : history_) streams.push_back({p, segs});

  std::map<ParticipantId, std::vector<Turn>> turns;
  for (const auto& [p, ring] : recent_turns_) {
    turns[p] = std::vector<Turn>(ring.begin(), ring.end());
  }

  std::vector<PairFeatures> features;
  if (streams.size() >= 2 && span.length() > 0) {
    features = windowed_features(streams, turns, span, config_.turns);
  }

  // Decayed accumulation; silent pairs decay only, coordinated-action pairs
  // get the bonus once.
  const auto& ep = config_.engine;
  for (auto& [pair, value] : affinity_) {
    value = ewma_affinity_step(value, 0.0, dt, ep.decay_half_life);
  }
  for (const auto& f : features) {
    const Pair key = make_pair_key(f.a, f.b);
    const double bonus = coord_bonus_pairs_.count(key) ? 1.0 : 0.0;
    const double s = ep.w_align * f.alignment - ep.w_overlap * f.overlap_frac + ep.w_coord * bonus;
    affinity_[key] += s;  // decay already applied above (new pairs start at 0)
  }
  coord_bonus_pairs_.clear();

  last_analysis_ = t;
  segment_turns_.clear();

  consider_proposal(t, cluster_floors(t));
}

std::vector<std::set<ParticipantId>> FloorEngine::cluster_floors(double t) const {
  const auto& ep = config_.engine;
  const double span_lo = std::max(0.0, t - ep.window);
  const double active_lo = std::max(0.0, t - 2 * ep.window);

  std::set<ParticipantId> tier1, tier2;
  for (const auto& [p, segs] : history_) {
    if (voiced_seconds(segs, span_lo, t) > 0) {
      tier1.insert(p);
    } else if (voiced_seconds(segs, active_lo, t) > 0) {
      tier2.insert(p);
    }
  }
  if (tier1.empty()) {
    tier1 = tier2;
    tier2.clear();
  }

  auto current_sets = [&]() {
    std::map<FloorId, std::set<ParticipantId>> by_floor;
    for (const auto& [p, f] : assignment_) by_floor[f].insert(p);
    std::vector<std::set<ParticipantId>> out;
    for (auto& [f, members] : by_floor) out.push_back(members);
    return out;
  };
  if (tier1.empty()) return current_sets();  // silence: no change proposed

  auto affinity_of = [this](const ParticipantId& a, const ParticipantId& b) {
    auto it = affinity_.find(make_pair_key(a, b));
    return it == affinity_.end() ? 0.0 : it->second;
  };

  std::vector<std::set<ParticipantId>> clusters;
  for (const auto& p : tier1) clusters.push_back({p});

  // Two clusters already sharing one current floor re-merge at the split
  // threshold; joining distinct floors needs the stronger merge threshold.
  auto threshold = [&](const std::set<ParticipantId>& a, const std::set<ParticipantId>& b) {
    std::set<FloorId> floors;
    for (const auto& p : a) floors.insert(assignment_.at(p));
    for (const auto& p : b) floors.insert(assignment_.at(p));
    return floors.size() <= 1 ? ep.split_threshold : ep.merge_threshold;
  };
  agglomerate_clusters(clusters, affinity_of, threshold);

  // Participants active in the wider window join by best affinity.
  for (const auto& p : tier2) {
    size_t best = 0;
    double best_avg = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < clusters.size(); ++i) {
      double total = 0;
      for (const auto& q : clusters[i]) total += affinity_of(p, q);
      const double avg = total / static_cast<double>(clusters[i].size());
      if (avg > best_avg) {
        best_avg = avg;
        best = i;
      }
    }
    clusters[best].insert(p);
  }

  // Longer-silent participants retain their floor: they follow the cluster
  // that inherits most of its active members, or stand alone with it.
  std::map<FloorId, std::set<ParticipantId>> silent_by_floor;
  for (const auto& [p, f] : assignment_) {
    if (!tier1.count(p) && !tier2.count(p)) silent_by_floor[f].insert(p);
  }
  for (const auto& [floor, silent] : silent_by_floor) {
    std::set<ParticipantId> active_members;
    for (const auto& [p, f] : assignment_) {
      if (f == floor && (tier1.count(p) || tier2.count(p))) active_members.insert(p);
    }
    size_t best = clusters.size();
    size_t best_overlap = 0;
    for (size_t i = 0; i < clusters.size(); ++i) {
      size_t overlap = 0;
      for (const auto& p : active_members) overlap += clusters[i].count(p);
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = i;
      }
    }
    if (best < clusters.size()) {
      clusters[best].insert(silent.begin(), silent.end());
    } else {
      clusters.push_back(silent);
    }
  }

  // No singleton floors: strand members dissolve into the nearest cluster.
  while (clusters.size() > 1) {
    size_t lone = clusters.size();
    for (size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].size() == 1) {
        lone = i;
        break;
      }
    }
    if (lone == clusters.size()) break;
    const ParticipantId p = *clusters[lone].begin();
    clusters.erase(clusters.begin() + static_cast<long>(lone));
    size_t best = 0;
    double best_avg = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < clusters.size(); ++i) {
      double total = 0;
      for (const auto& q : clusters[i]) total += affinity_of(p, q);
      const double avg = total / static_cast<double>(clusters[i].size());
      if (avg > best_avg) {
        best_avg = avg;
        best = i;
      }
    }
    clusters[best].insert(p);
  }

  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return clusters;
}

void FloorEngine::consider_proposal(double t, std::vector<std::set<ParticipantId>> clusters) {
  std::map<FloorId, std::set<ParticipantId>> by_floor;
  for (const auto& [p, f] : assignment_) by_floor[f].insert(p);
  std::vector<std::set<ParticipantId>> current;
  for (auto& [f, members] : by_floor) current.push_back(members);
  std::sort(current.begin(), current.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });

  if (clusters == current) {
    pending_.reset();
    return;
  }
  if (pending_ && pending_->clusters == clusters) {
    double eff = config_.engine.hysteresis;
    // A reduced-stability initiator halves the persistence requirement for
    // proposals that split them away from current co-members.
    for (const auto& [p, until] : reduced_until_) {
      if (until <= t) continue;
      const FloorId f = assignment_.at(p);
      const std::set<ParticipantId>* proposed = nullptr;
      for (const auto& c : clusters) {
        if (c.count(p)) proposed = &c;
      }
      if (!proposed) continue;
      for (const auto& [q, fq] : assignment_) {
        if (q != p && fq == f && !proposed->count(q)) {
          eff = config_.engine.hysteresis / 2;
        }
      }
    }
    if (t - pending_->since >= eff) {
      adopt_partition(t, clusters);
      pending_.reset();
    }
  } else {
    pending_ = PendingProposal{std::move(clusters), t};
  }
}

void FloorEngine::adopt_partition(double t, const std::vector<std::set<ParticipantId>>& clusters) {
  std::map<FloorId, std::set<ParticipantId>> old_floors;
  for (const auto& [p, f] : assignment_) old_floors[f].insert(p);

  // Identity continuity: clusters inherit the floor id they overlap most;
  // ties favour the older floor. Merges therefore keep the older id.
  struct Cand {
    size_t overlap;
    int ordinal;
    size_t cluster;
  };
  std::vector<Cand> cands;
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& [f, members] : old_floors) {
      size_t overlap = 0;
      for (const auto& p : clusters[c]) overlap += members.count(p);
      if (overlap > 0) cands.push_back({overlap, f.ordinal, c});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.ordinal != b.ordinal) return a.ordinal < b.ordinal;
    return a.cluster < b.cluster;
  });
  std::map<size_t, FloorId> cluster_floor;
  std::set<int> used;
  for (const auto& cand : cands) {
    if (cluster_floor.count(cand.cluster) || used.count(cand.ordinal)) continue;
    cluster_floor[cand.cluster] = FloorId{cand.ordinal};
    used.insert(cand.ordinal);
  }
  for (size_t c = 0; c < clusters.size(); ++c) {
    if (!cluster_floor.count(c)) {
      const FloorId fid = fresh_floor();
      cluster_floor[c] = fid;
      events_.push_back({FloorEvent::Kind::Start, t, fid,
                         {clusters[c].begin(), clusters[c].end()}});
    }
  }
  for (const auto& [f, members] : old_floors) {
    if (!used.count(f.ordinal)) events_.push_back({FloorEvent::Kind::End, t, f, {}});
  }

  for (size_t c = 0; c < clusters.size(); ++c) {
    const FloorId fid = cluster_floor[c];
    for (const auto& p : clusters[c]) {
      const FloorId prev = assignment_.at(p);
      if (prev == fid) continue;
      close_stint(p, std::nullopt);
      if (used.count(prev.ordinal)) events_.push_back({FloorEvent::Kind::Leave, t, prev, {p}});
      assignment_[p] = fid;
      const bool into_new =
          std::none_of(old_floors.begin(), old_floors.end(),
                       [&](const auto& kv) { return kv.first == fid; });
      if (!into_new) events_.push_back({FloorEvent::Kind::Join, t, fid, {p}});
    }
  }
}

void FloorEngine::apply_cue(const SchismCue& cue) {
  if (!cue.valid()) throw Error(ErrorCode::BadArgument, "invalid cue");
  if (!assignment_.count(cue.initiator)) {
    throw Error(ErrorCode::BadArgument, "cue initiator unknown: " + cue.initiator);
  }
  for (const auto& r : cue.responders) {
    if (!assignment_.count(r)) throw Error(ErrorCode::BadArgument, "cue responder unknown: " + r);
  }
  switch (cue.kind) {
    case CueKind::Sit:
    case CueKind::Aside: {
      auto& until = reduced_until_[cue.initiator];
      until = std::max(until, cue.t + config_.engine.stability_window);
      break;
    }
    case CueKind::Coord: {
      std::vector<ParticipantId> members(cue.responders.begin(), cue.responders.end());
      members.push_back(cue.initiator);
      for (size_t i = 0; i < members.size(); ++i) {
        for (size_t j = i + 1; j < members.size(); ++j) {
          coord_bonus_pairs_.insert(make_pair_key(members[i], members[j]));
        }
      }
      break;
    }
    case CueKind::Confirm: {
      // Replayed cue: recover the initiating turn from the ring buffer.
      std::optional<Turn> initiating;
      auto it = recent_turns_.find(cue.initiator);
      if (it != recent_turns_.end()) {
        for (const auto& u : it->second) {
          if (u.t0 < cue.t && cue.t <= u.t1 + config_.detectors.confirm_max_gap) {
            if (!initiating || u.t0 > initiating->t0) initiating = u;
          }
        }
      }
      ConfirmDecision decision;
      decision.responder = cue.responders.empty() ? ParticipantId{} : *cue.responders.begin();
      decision.t_response = cue.t;
      if (initiating) {
        decision.initiating = *initiating;
      } else {
        decision.initiating.participant = cue.initiator;
        decision.initiating.t0 = cue.t;
        decision.initiating.t1 = cue.t;
      }
      apply_confirm(decision, now_);
      break;
    }
  }
}

void FloorEngine::apply_confirm(const ConfirmDecision& decision, double t) {
  const ParticipantId& initiator = decision.initiating.participant;
  const ParticipantId& responder = decision.responder;
  if (!assignment_.count(initiator) || !assignment_.count(responder)) return;

  std::map<FloorId, std::set<ParticipantId>> by_floor;
  for (const auto& [p, f] : assignment_) by_floor[f].insert(p);
  const FloorId fi = assignment_.at(initiator);
  const FloorId fr = assignment_.at(responder);
  if (fi == fr && by_floor.at(fi).size() == 2) return;  // already their own floor

  const double t_event = decision.t_response;
  const FloorId fid = fresh_floor();

  for (const ParticipantId& p : {initiator, responder}) {
    const FloorId prev = assignment_.at(p);
    close_stint(p, std::nullopt);
    events_.push_back({FloorEvent::Kind::Leave, t_event, prev, {p}});
    assignment_[p] = fid;
    by_floor[prev].erase(p);
  }
  events_.push_back({FloorEvent::Kind::Start, t_event, fid,
                     {std::min(initiator, responder), std::max(initiator, responder)}});

  // The responder's old-floor interval ends at their last turn completed
  // before the response; the response turn itself belongs to the new floor.
  {
    const double natural = last_turn_end_before(responder, t_event);
    for (auto rit = closed_.rbegin(); rit != closed_.rend(); ++rit) {
      if (rit->participant != responder) continue;
      if (natural > rit->t0 && rit->t1 > natural) {
        rit->t1 = natural;
      } else if (natural <= rit->t0 && rit->t1 > t_event) {
        rit->t1 = t_event;
      }
      break;
    }
  }

  // New-floor labels open at the confirmation time (responder) and get
  // back-dated to the initiating turn onset below when still in horizon.
  open_stint(initiator, fid, t_event);
  open_stint(responder, fid, t_event);
  {
    auto& stint = stints_.at(responder);
    auto it = recent_turns_.find(responder);
    if (it != recent_turns_.end()) {
      for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) {
        if (std::abs(rit->t0 - t_event) < 1e-6) {
          stint.last_turn_end = std::max(stint.last_turn_end, rit->t1);
          break;
        }
      }
    }
  }
  if (decision.initiating.t1 > decision.initiating.t0) {
    try {
      retro_relabel(fid, decision.initiating);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Stale) throw;
    }
  }

  // Evidence seeding keeps the very next proposals consistent with the
  // split until turn-taking features accumulate.
  const Pair pk = make_pair_key(initiator, responder);
  affinity_[pk] = std::max(affinity_[pk], config_.engine.merge_threshold + 1.0);
  for (const ParticipantId& p : {initiator, responder}) {
    for (const auto& q : by_floor[fi]) {
      if (q == p) continue;
      const Pair ck = make_pair_key(p, q);
      affinity_[ck] = std::min(affinity_[ck], config_.engine.split_threshold - 1.0);
    }
  }

  // Stranded singleton floors dissolve into the nearest floor by affinity.
  for (const FloorId prev : {fi, fr}) {
    if (by_floor.at(prev).size() != 1) continue;
    const ParticipantId lone = *by_floor.at(prev).begin();
    double best = -std::numeric_limits<double>::infinity();
    FloorId target = fid;
    for (const auto& [f, members] : by_floor) {
      if (f == prev || members.empty()) continue;
      double total = 0;
      for (const auto& q : members) {
        auto it = affinity_.find(make_pair_key(lone, q));
        total += it == affinity_.end() ? 0.0 : it->second;
      }
      const double avg = total / static_cast<double>(members.size());
      if (avg > best) {
        best = avg;
        target = f;
      }
    }
    close_stint(lone, std::nullopt);
    events_.push_back({FloorEvent::Kind::Leave, t_event, prev, {lone}});
    events_.push_back({FloorEvent::Kind::End, t_event, prev, {}});
    events_.push_back({FloorEvent::Kind::Join, t_event, target, {lone}});
    assignment_[lone] = target;
    by_floor[target].insert(lone);
    by_floor[prev].clear();
  }

  pending_.reset();
}

void FloorEngine::retro_relabel(FloorId new_floor, const Turn& initiating_turn) {
  const ParticipantId& p = initiating_turn.participant;
  if (now_ - initiating_turn.t0 > config_.engine.retro_horizon) {
    throw Error(ErrorCode::Stale, "initiating turn older than retro_horizon");
  }
  auto it = stints_.find(p);
  if (it == stints_.end() || !(it->second.floor == new_floor)) {
    throw Error(ErrorCode::BadArgument, "no open stint in the new floor");
  }

  // Truncate the most recent previous-floor interval at the initiating turn
  // onset (dropping it when nothing precedes the onset), then back-date the
  // new one to the same instant.
  for (auto rit = closed_.rbegin(); rit != closed_.rend(); ++rit) {
    if (rit->participant != p) continue;
    if (initiating_turn.t0 <= rit->t0) {
      closed_.erase(std::next(rit).base());
    } else if (rit->t1 > initiating_turn.t0) {
      rit->t1 = initiating_turn.t0;
    }
    break;
  }
  double prev_end = 0.0;
  for (auto rit = closed_.rbegin(); rit != closed_.rend(); ++rit) {
    if (rit->participant == p) {
      prev_end = rit->t1;
      break;
    }
  }
  it->second.label_t0 = std::max(initiating_turn.t0, prev_end);
  it->second.last_turn_end = std::max(it->second.last_turn_end, initiating_turn.t1);
}

void FloorEngine::on_turn_finalized(const Turn& raw) {
  Turn turn = raw;
  {
    SessionStreams streams;
    for (const auto& [p, segs] : history_) streams.push_back({p, segs});
    turn.onset_in_clear = !other_voiced_at(streams, turn.participant, turn.t0);
  }

  const ParticipantId& p = turn.participant;
  auto it = stints_.find(p);
  if (it == stints_.end()) {
    open_stint(p, assignment_.at(p), turn.t0);
    stints_.at(p).last_turn_end = turn.t1;
  } else {
    if (it->second.label_t0 < 0) it->second.label_t0 = turn.t0;
    it->second.last_turn_end = std::max(it->second.last_turn_end, turn.t1);
  }

  recent_turns_[p].push_back(turn);
  segment_turns_[p].push_back(turn);
}

void FloorEngine::close_stint(const ParticipantId& p, std::optional<double> truncate_at) {
  auto it = stints_.find(p);
  if (it == stints_.end()) return;
  double end = it->second.last_turn_end;
  if (truncate_at) end = std::min(end, *truncate_at);
  if (it->second.label_t0 >= 0 && end > it->second.label_t0) {
    closed_.push_back({p, it->second.floor, it->second.label_t0, end});
  }
  stints_.erase(it);
}

void FloorEngine::open_stint(const ParticipantId& p, FloorId floor, double label_t0) {
  // Labels of one participant must not overlap; clamp against the last
  // closed interval.
  double prev_end = 0.0;
  for (auto rit = closed_.rbegin(); rit != closed_.rend(); ++rit) {
    if (rit->participant == p) {
      prev_end = rit->t1;
      break;
    }
  }
  Stint stint;
  stint.floor = floor;
  stint.label_t0 = std::max(label_t0, prev_end);
  stint.last_turn_end = stint.label_t0;
  stints_[p] = stint;
}

double FloorEngine::last_turn_end_before(const ParticipantId& p, double t) const {
  auto it = recent_turns_.find(p);
  if (it == recent_turns_.end()) return -1.0;
  double best = -1.0;
  for (const auto& turn : it->second) {
    if (turn.t1 <= t) best = std::max(best, turn.t1);
  }
  return best;
}

FloorId FloorEngine::fresh_floor() { return FloorId{next_ordinal_++}; }

std::vector<AffiliationInterval> FloorEngine::emit_labels(double finalize_before) {
  if (!finished_ && finalize_before > now_ - config_.engine.retro_horizon) {
    throw Error(ErrorCode::BadArgument,
                "labels inside the retro horizon are not final yet");
  }
  std::vector<AffiliationInterval> out;
  std::vector<AffiliationInterval> keep;
  for (auto& iv : closed_) {
    if (iv.t1 <= finalize_before) {
      out.push_back(iv);
    } else {
      keep.push_back(iv);
    }
  }
  closed_ = std::move(keep);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.participant != b.participant) return a.participant < b.participant;
    return a.t0 < b.t0;
  });
  return out;
}

void FloorEngine::finish() {
  if (finished_) return;
  for (auto& [p, open] : open_turns_) {
    if (!open.empty()) {
      Turn turn = merge_into_turn(std::move(open));
      open.clear();
      on_turn_finalized(turn);
    }
  }
  if (bank_) {
    for (auto& cue : bank_->finish()) {
      emitted_cues_.push_back(cue);
      if (config_.use_cues && cue.kind != CueKind::Confirm) apply_cue(cue);
    }
    for (auto& decision : bank_->drain_confirms()) {
      if (config_.use_cues) apply_confirm(decision, now_);
    }
  }
  run_analysis(now_);
  std::vector<ParticipantId> with_stints;
  for (const auto& [p, stint] : stints_) with_stints.push_back(p);
  for (const auto& p : with_stints) close_stint(p, std::nullopt);
  finished_ = true;
}

std::vector<FloorEvent> FloorEngine::drain_events() {
  std::stable_sort(events_.begin(), events_.end(),
                   [](const FloorEvent& a, const FloorEvent& b) { return a.t < b.t; });
  return std::exchange(events_, {});
}

std::vector<SchismCue> FloorEngine::drain_emitted_cues() { return std::exchange(emitted_cues_, {}); }

std::map<ParticipantId, FloorId> FloorEngine::partition() const { return assignment_; }

std::map<FloorId, std::set<ParticipantId>> FloorEngine::floors() const {
  std::map<FloorId, std::set<ParticipantId>> out;
  for (const auto& [p, f] : assignment_) out[f].insert(p);
  return out;
}

double FloorEngine::affinity(const ParticipantId& a, const ParticipantId& b) const {
  auto it = affinity_.find(make_pair_key(a, b));
  return it == affinity_.end() ? 0.0 : it->second;
}

double FloorEngine::stability(FloorId floor) const {
  for (const auto& [p, f] : assignment_) {
    if (f == floor) {
      auto it = reduced_until_.find(p);
      if (it != reduced_until_.end() && it->second > now_) {
        return std::clamp(1.0 - config_.engine.stability_drop, 0.0, 1.0);
      }
    }
  }
  return 1.0;
}

bool FloorEngine::stability_reduced(const ParticipantId& p, double t) const {
  auto it = reduced_until_.find(p);
  return it != reduced_until_.end() && it->second > t;
}

void FloorEngine::trim(double t) {
  const double keep = std::max(config_.engine.retro_horizon, 2 * config_.engine.window) + 10.0;
  const double before = t - keep;
  for (auto& [p, segs] : history_) {
    auto it = std::lower_bound(segs.begin(), segs.end(), before,
                               [](const VadSegment& s, double v) { return s.t1 < v; });
    segs.erase(segs.begin(), it);
  }
  for (auto& [p, turns] : recent_turns_) {
    while (!turns.empty() && turns.front().t1 < before) turns.pop_front();
  }
  std::erase_if(reduced_until_, [&](const auto& kv) { return kv.second < before; });
  if (bank_) bank_->trim(before);
}

}  // namespace floorsight
