#include "floorsight/turns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "floorsight/errors.hpp"

namespace floorsight {

bool other_voiced_at(const SessionStreams& streams, const ParticipantId& self, double t) {
  for (const auto& stream : streams) {
    if (stream.participant == self) continue;
    auto it = std::upper_bound(stream.segments.begin(), stream.segments.end(), t,
                               [](double v, const VadSegment& s) { return v < s.t0; });
    if (it != stream.segments.begin()) {
      --it;
      if (t >= it->t0 && t < it->t1) return true;
    }
  }
  return false;
}

Turn merge_into_turn(std::vector<VadSegment> segs) {
  Turn turn;
  turn.participant = segs.front().participant;
  turn.t0 = segs.front().t0;
  turn.t1 = segs.back().t1;
  double weighted = 0.0, total = 0.0;
  for (const auto& s : segs) {
    weighted += s.e_mean * s.duration();
    total += s.duration();
  }
  turn.e_mean = total > 0 ? weighted / total : 0.0;
  turn.segments = std::move(segs);
  return turn;
}

SegmentList union_voiced(const SessionStreams& streams) {
  SegmentList all;
  for (const auto& s : streams) all.insert(all.end(), s.segments.begin(), s.segments.end());
  std::sort(all.begin(), all.end(),
            [](const VadSegment& a, const VadSegment& b) { return a.t0 < b.t0; });
  SegmentList merged;
  for (const auto& seg : all) {
    if (!merged.empty() && seg.t0 <= merged.back().t1) {
      merged.back().t1 = std::max(merged.back().t1, seg.t1);
    } else {
      merged.push_back(seg);
    }
  }
  for (auto& seg : merged) seg.participant.clear();
  return merged;
}

std::vector<Turn> build_turns(const SessionStreams& streams, double merge_gap) {
  std::vector<Turn> turns;
  for (const auto& stream : streams) {
    std::vector<VadSegment> pending;
    for (const auto& seg : stream.segments) {
      if (!pending.empty() && seg.t0 - pending.back().t1 < merge_gap) {
        pending.push_back(seg);
      } else {
        if (!pending.empty()) turns.push_back(merge_into_turn(std::move(pending)));
        pending = {seg};
      }
    }
    if (!pending.empty()) turns.push_back(merge_into_turn(std::move(pending)));
  }
  for (auto& turn : turns) {
    turn.onset_in_clear = !other_voiced_at(streams, turn.participant, turn.t0);
  }
  std::sort(turns.begin(), turns.end(), [](const Turn& x, const Turn& y) {
    if (x.t0 != y.t0) return x.t0 < y.t0;
    return x.participant < y.participant;
  });
  return turns;
}

double cospeech_seconds(const SegmentList& a, const SegmentList& b, TimeWindow window) {
  double total = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max({a[i].t0, b[j].t0, window.t0});
    double hi = std::min({a[i].t1, b[j].t1, window.t1});
    if (hi > lo) total += hi - lo;
    if (a[i].t1 < b[j].t1) ++i; else ++j;
  }
  return total;
}

PairFeatures pairwise_overlap_stats(const ParticipantStream& a, const ParticipantStream& b,
                                    TimeWindow window) {
  if (window.t1 <= window.t0) throw Error(ErrorCode::BadArgument, "empty window");
  const ParticipantStream& first = a.participant < b.participant ? a : b;
  const ParticipantStream& second = a.participant < b.participant ? b : a;

  PairFeatures f;
  f.a = first.participant;
  f.b = second.participant;
  f.window = window;
  f.cospeech_seconds = cospeech_seconds(first.segments, second.segments, window);

  const double va = voiced_seconds(first.segments, window.t0, window.t1);
  const double vb = voiced_seconds(second.segments, window.t0, window.t1);
  const double denom = std::min(va, vb);
  f.overlap_frac = denom > 0 ? std::clamp(f.cospeech_seconds / denom, 0.0, 1.0) : 0.0;
  return f;
}

namespace {

// Fraction of a's onsets in window within g of some offset of b.
std::optional<double> one_sided_alignment(const std::vector<Turn>& turns_a,
                                          const std::vector<Turn>& turns_b, TimeWindow window,
                                          double g) {
  std::vector<double> offsets;
  offsets.reserve(turns_b.size());
  for (const auto& t : turns_b) offsets.push_back(t.t1);
  std::sort(offsets.begin(), offsets.end());

  int count = 0, matched = 0;
  for (const auto& turn : turns_a) {
    if (turn.t0 < window.t0 || turn.t0 >= window.t1) continue;
    ++count;
    auto it = std::lower_bound(offsets.begin(), offsets.end(), turn.t0);
    double best = std::numeric_limits<double>::infinity();
    if (it != offsets.end()) best = std::min(best, *it - turn.t0);
    if (it != offsets.begin()) best = std::min(best, turn.t0 - *std::prev(it));
    if (best <= g) ++matched;
  }
  if (count == 0) return std::nullopt;
  return static_cast<double>(matched) / count;
}

}  // namespace

double alignment_score(const std::vector<Turn>& turns_a, const std::vector<Turn>& turns_b,
                       TimeWindow window, double g) {
  if (g <= 0) throw Error(ErrorCode::BadArgument, "alignment tolerance must be positive");
  auto ab = one_sided_alignment(turns_a, turns_b, window, g);
  auto ba = one_sided_alignment(turns_b, turns_a, window, g);
  if (ab && ba) return 0.5 * (*ab + *ba);
  if (ab) return *ab;
  if (ba) return *ba;
  return 0.0;
}

std::vector<PairFeatures> windowed_features(const SessionStreams& streams, TimeWindow window,
                                            const TurnParams& params) {
  std::map<ParticipantId, std::vector<Turn>> grouped;
  for (auto& turn : build_turns(streams, params.merge_gap)) {
    grouped[turn.participant].push_back(std::move(turn));
  }
  return windowed_features(streams, grouped, window, params);
}

std::vector<PairFeatures> windowed_features(const SessionStreams& streams,
                                            const std::map<ParticipantId, std::vector<Turn>>& turns,
                                            TimeWindow window, const TurnParams& params) {
  if (streams.size() < 2) throw Error(ErrorCode::TooFewParticipants, "need >= 2 streams");
  static const std::vector<Turn> kNoTurns;
  std::vector<PairFeatures> features;
  features.reserve(streams.size() * (streams.size() - 1) / 2);
  for (size_t i = 0; i < streams.size(); ++i) {
    for (size_t j = i + 1; j < streams.size(); ++j) {
      PairFeatures f = pairwise_overlap_stats(streams[i], streams[j], window);
      auto ta = turns.find(f.a);
      auto tb = turns.find(f.b);
      f.alignment = alignment_score(ta != turns.end() ? ta->second : kNoTurns,
                                    tb != turns.end() ? tb->second : kNoTurns, window,
                                    params.alignment_tolerance);
      features.push_back(std::move(f));
    }
  }
  return features;
}

}  // namespace floorsight
