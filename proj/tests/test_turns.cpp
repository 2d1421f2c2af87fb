#include <doctest.h>

#include <cmath>

#include "floorsight/rng.hpp"
#include "floorsight/turns.hpp"

using namespace floorsight;

namespace {

SegmentList segs(const ParticipantId& p, std::initializer_list<std::pair<double, double>> spans,
                 double e = -20.0) {
  SegmentList out;
  for (const auto& [a, b] : spans) out.push_back({p, a, b, e, e + 2});
  return out;
}

SessionStreams random_session(Rng& rng, int participants, double span) {
  SessionStreams streams;
  for (int i = 0; i < participants; ++i) {
    SegmentList list;
    double t = rng.uniform(0, 2.0);
    while (t < span) {
      const double on = rng.uniform(0.2, 3.0);
      if (t + on > span) break;
      list.push_back({"p" + std::to_string(i + 1), t, t + on, rng.uniform(-40, -10), -5});
      t += on + rng.uniform(0.1, 3.0);
    }
    streams.push_back({"p" + std::to_string(i + 1), list});
  }
  return streams;
}

// 1 ms-grid intersection oracle.
double grid_cospeech(const SegmentList& a, const SegmentList& b, TimeWindow w) {
  auto voiced = [](const SegmentList& list, double t) {
    for (const auto& s : list) {
      if (t >= s.t0 && t < s.t1) return true;
    }
    return false;
  };
  double total = 0;
  for (double t = w.t0 + 0.0005; t < w.t1; t += 0.001) {
    if (voiced(a, t) && voiced(b, t)) total += 0.001;
  }
  return total;
}

}  // namespace

TEST_CASE("build_turns merges within the gap and splits otherwise") {
  SessionStreams streams = {{"a", segs("a", {{0, 1}, {1.2, 2}})}};
  auto turns = build_turns(streams, 0.5);
  REQUIRE(turns.size() == 1);
  CHECK(turns[0].t0 == doctest::Approx(0.0));
  CHECK(turns[0].t1 == doctest::Approx(2.0));
  CHECK(turns[0].segments.size() == 2);

  streams = {{"a", segs("a", {{0, 1}, {1.8, 2.6}})}};
  turns = build_turns(streams, 0.5);
  CHECK(turns.size() == 2);
}

TEST_CASE("build_turns: onset in the clear vs in overlap") {
  SessionStreams streams = {
      {"a", segs("a", {{5, 7}})},
      {"b", segs("b", {{4, 6}})},
  };
  const auto turns = build_turns(streams, 0.5);
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].participant == "b");
  CHECK(turns[0].onset_in_clear);
  CHECK(turns[1].participant == "a");
  CHECK_FALSE(turns[1].onset_in_clear);
}

TEST_CASE("build_turns is idempotent on its own output") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto streams = random_session(rng, 4, 60.0);
    const auto turns = build_turns(streams, 0.5);

    SessionStreams turn_streams;
    std::map<ParticipantId, SegmentList> grouped;
    for (const auto& t : turns) {
      for (const auto& s : t.segments) grouped[t.participant].push_back(s);
    }
    for (const auto& [p, list] : grouped) turn_streams.push_back({p, list});

    const auto again = build_turns(turn_streams, 0.5);
    REQUIRE(again.size() == turns.size());
    for (size_t i = 0; i < turns.size(); ++i) {
      CHECK(again[i].t0 == doctest::Approx(turns[i].t0));
      CHECK(again[i].t1 == doctest::Approx(turns[i].t1));
      CHECK(again[i].participant == turns[i].participant);
    }
  }
}

TEST_CASE("pairwise_overlap_stats: identical, disjoint, and windowed") {
  ParticipantStream a{"a", segs("a", {{0, 2}, {3, 5}})};
  ParticipantStream b{"b", segs("b", {{0, 2}, {3, 5}})};
  auto f = pairwise_overlap_stats(a, b, {0, 10});
  CHECK(f.overlap_frac == doctest::Approx(1.0));
  CHECK(f.cospeech_seconds == doctest::Approx(4.0));

  ParticipantStream c{"c", segs("c", {{2, 3}, {5, 6}})};
  f = pairwise_overlap_stats(a, c, {0, 10});
  CHECK(f.overlap_frac == doctest::Approx(0.0));

  ParticipantStream d{"d", {}};
  f = pairwise_overlap_stats(a, d, {0, 10});
  CHECK(f.overlap_frac == doctest::Approx(0.0));
  CHECK(f.cospeech_seconds == doctest::Approx(0.0));
}

TEST_CASE("pairwise overlap matches 1 ms grid sampling within 2 ms") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const auto session = random_session(rng, 2, 30.0);
    const TimeWindow w{rng.uniform(0, 5), rng.uniform(20, 30)};
    const auto f = pairwise_overlap_stats(session[0], session[1], w);
    const double expected = grid_cospeech(session[0].segments, session[1].segments, w);
    CHECK(std::abs(f.cospeech_seconds - expected) <= 0.002 * std::max(1.0, expected / 0.5));
  }
}

TEST_CASE("alignment_score: perfect adjacency and none") {
  // Clean alternation: a starts when b ends and vice versa. The window
  // starts at 1 so b's opening turn (which nothing precedes) is not scored.
  std::vector<Turn> ta, tb;
  for (int i = 0; i < 5; ++i) {
    Turn b;
    b.participant = "b";
    b.t0 = i * 4.0;
    b.t1 = i * 4.0 + 2.0;
    tb.push_back(b);
    Turn a;
    a.participant = "a";
    a.t0 = b.t1;
    a.t1 = b.t1 + 1.6;
    ta.push_back(a);
  }
  CHECK(alignment_score(ta, tb, {1, 100}, 0.5) == doctest::Approx(1.0));

  // a speaks strictly mid-b, never near offsets.
  std::vector<Turn> mid;
  for (int i = 0; i < 5; ++i) {
    Turn a;
    a.participant = "a";
    a.t0 = i * 4.0 + 0.9;  // b's offset at i*4+2, distance 1.1 > g
    a.t1 = a.t0 + 0.2;
    mid.push_back(a);
  }
  CHECK(alignment_score(mid, tb, {0, 100}, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("alignment_score matches an all-pairs distance scan") {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const auto session = random_session(rng, 2, 40.0);
    const auto turns = build_turns(session, 0.5);
    std::vector<Turn> ta, tb;
    for (const auto& t : turns) (t.participant == "p1" ? ta : tb).push_back(t);
    const TimeWindow w{0, 40};
    const double g = 0.5;

    auto one_side = [&](const std::vector<Turn>& xs, const std::vector<Turn>& ys) {
      int count = 0, hit = 0;
      for (const auto& x : xs) {
        if (x.t0 < w.t0 || x.t0 >= w.t1) continue;
        ++count;
        bool near = false;
        for (const auto& y : ys) {
          if (std::abs(x.t0 - y.t1) <= g) near = true;
        }
        if (near) ++hit;
      }
      return std::pair<int, int>{hit, count};
    };
    const auto [ha, ca] = one_side(ta, tb);
    const auto [hb, cb] = one_side(tb, ta);
    double expected = 0;
    if (ca > 0 && cb > 0) {
      expected = 0.5 * (double(ha) / ca + double(hb) / cb);
    } else if (ca > 0) {
      expected = double(ha) / ca;
    } else if (cb > 0) {
      expected = double(hb) / cb;
    }
    CHECK(alignment_score(ta, tb, w, g) == doctest::Approx(expected));
  }
}

TEST_CASE("windowed_features: pair count and per-pair equality") {
  Rng rng(31);
  const auto two = random_session(rng, 2, 20.0);
  CHECK(windowed_features(two, {0, 20}, TurnParams{}).size() == 1);

  const auto ten = random_session(rng, 10, 20.0);
  const auto features = windowed_features(ten, {0, 20}, TurnParams{});
  CHECK(features.size() == 45);

  // Features equal independent per-pair recomputation.
  const auto turns = build_turns(ten, TurnParams{}.merge_gap);
  std::map<ParticipantId, std::vector<Turn>> grouped;
  for (const auto& t : turns) grouped[t.participant].push_back(t);
  for (const auto& f : features) {
    const ParticipantStream* a = nullptr;
    const ParticipantStream* b = nullptr;
    for (const auto& s : ten) {
      if (s.participant == f.a) a = &s;
      if (s.participant == f.b) b = &s;
    }
    REQUIRE(a);
    REQUIRE(b);
    const auto expect = pairwise_overlap_stats(*a, *b, f.window);
    CHECK(f.overlap_frac == doctest::Approx(expect.overlap_frac));
    CHECK(f.cospeech_seconds == doctest::Approx(expect.cospeech_seconds));
    CHECK(f.alignment ==
          doctest::Approx(alignment_score(grouped[f.a], grouped[f.b], f.window, 0.5)));
  }
}

TEST_CASE("overlap and alignment are invariant under a global time shift") {
  Rng rng(37);
  const double shift = 1234.5;
  for (int trial = 0; trial < 20; ++trial) {
    auto session = random_session(rng, 3, 30.0);
    const auto before = windowed_features(session, {0, 30}, TurnParams{});
    for (auto& s : session) {
      for (auto& seg : s.segments) {
        seg.t0 += shift;
        seg.t1 += shift;
      }
    }
    const auto after = windowed_features(session, {shift, 30 + shift}, TurnParams{});
    REQUIRE(before.size() == after.size());
    for (size_t i = 0; i < before.size(); ++i) {
      CHECK(before[i].overlap_frac == doctest::Approx(after[i].overlap_frac));
      CHECK(before[i].alignment == doctest::Approx(after[i].alignment));
      CHECK(before[i].overlap_frac >= 0.0);
      CHECK(before[i].overlap_frac <= 1.0);
      CHECK(before[i].alignment >= 0.0);
      CHECK(before[i].alignment <= 1.0);
    }
  }
}
