#include <doctest.h>

#include <cmath>

#include "floorsight/cues.hpp"
#include "floorsight/errors.hpp"
#include "floorsight/rng.hpp"

using namespace floorsight;

namespace {

Turn make_turn(const ParticipantId& p, double t0, double t1, double e_mean, bool in_clear) {
  Turn t;
  t.participant = p;
  t.t0 = t0;
  t.t1 = t1;
  t.e_mean = e_mean;
  t.onset_in_clear = in_clear;
  t.segments = {{p, t0, t1, e_mean, e_mean + 2}};
  return t;
}

TokenAnnotation tok(const ParticipantId& p, double t0, const std::string& text, bool address) {
  return {p, t0, t0 + 0.2, text, address};
}

}  // namespace

TEST_CASE("detect_sit_cue: repeated address in the clear scores 1.0") {
  const Turn turn = make_turn("n", 10.0, 14.0, -20, true);
  std::vector<TokenAnnotation> tokens = {
      tok("n", 10.0, "carl", true),
      tok("n", 10.3, "carl", true),
      tok("n", 10.6, "carl", true),
  };
  const auto cue = detect_sit_cue(turn, tokens, DetectorParams{});
  REQUIRE(cue.has_value());
  CHECK(cue->kind == CueKind::Sit);
  CHECK(cue->t == doctest::Approx(10.0));
  CHECK(cue->initiator == "n");
  CHECK(cue->strength == doctest::Approx(1.0));
  CHECK(cue->responders.empty());
}

TEST_CASE("detect_sit_cue: single address, in overlap, scores the base") {
  const Turn turn = make_turn("n", 10.0, 14.0, -20, false);
  const auto cue = detect_sit_cue(turn, {tok("n", 10.1, "zoe", true)}, DetectorParams{});
  REQUIRE(cue.has_value());
  CHECK(cue->strength == doctest::Approx(0.6));
}

TEST_CASE("detect_sit_cue: no cue without address tokens or outside the window") {
  const Turn turn = make_turn("n", 10.0, 20.0, -20, true);
  CHECK_FALSE(detect_sit_cue(turn, {}, DetectorParams{}).has_value());
  CHECK_FALSE(detect_sit_cue(turn, {tok("n", 10.2, "later", false)}, DetectorParams{}).has_value());
  // Address token 5 s into the turn with a 2 s initial window.
  CHECK_FALSE(detect_sit_cue(turn, {tok("n", 15.0, "carl", true)}, DetectorParams{}).has_value());
}

TEST_CASE("detect_aside_cue: subdued overlap fires, everything else does not") {
  DetectorParams params;  // aside_delta 8
  const double baseline = -20.0;

  const auto hit = detect_aside_cue(make_turn("s", 5, 7, -32, false), baseline, params);
  REQUIRE(hit.has_value());
  CHECK(hit->kind == CueKind::Aside);
  CHECK(hit->strength == doctest::Approx(1.0));  // 12 dB drop saturates

  const auto at_threshold = detect_aside_cue(make_turn("s", 5, 7, -28, false), baseline, params);
  REQUIRE(at_threshold.has_value());
  CHECK(at_threshold->strength == doctest::Approx(0.5));

  CHECK_FALSE(detect_aside_cue(make_turn("s", 5, 7, -20, true), baseline, params).has_value());
  CHECK_FALSE(detect_aside_cue(make_turn("s", 5, 7, -20, false), baseline, params).has_value());
  CHECK_FALSE(detect_aside_cue(make_turn("s", 5, 7, -32, true), baseline, params).has_value());

  CHECK_THROWS_WITH_AS(detect_aside_cue(make_turn("s", 5, 7, -32, false), std::nullopt, params),
                       doctest::Contains("NO_BASELINE"), Error);
}

TEST_CASE("aside monotonicity: raising aside_delta never adds cues") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double e = rng.uniform(-45, -15);
    const Turn turn = make_turn("s", 0, 2, e, false);
    int prev = 2;
    for (double delta : {4.0, 8.0, 12.0, 16.0}) {
      DetectorParams p;
      p.aside_delta = delta;
      const int now = detect_aside_cue(turn, -20.0, p).has_value() ? 1 : 0;
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("detect_coordinated_action: choral bursts from eight participants") {
  SessionStreams streams;
  Rng rng(8);
  for (int i = 0; i < 8; ++i) {
    const ParticipantId p = "p" + std::to_string(i + 1);
    const double onset = 100.0 + 0.3 * rng.uniform();
    const double len = 1.8 + rng.uniform(-0.2, 0.2);
    streams.push_back({p, {{p, onset, onset + len, -18, -15}}});
  }
  const auto cue = detect_coordinated_action(streams, {95, 110}, DetectorParams{});
  REQUIRE(cue.has_value());
  CHECK(cue->kind == CueKind::Coord);
  CHECK(cue->responders.size() == 7);
  CHECK(cue->strength > 0.3);
  CHECK(cue->strength <= 1.0);
}

TEST_CASE("detect_coordinated_action: single speaker and stragglers do not fire") {
  SessionStreams one = {{"a", {{"a", 100, 101.5, -18, -15}}}};
  CHECK_FALSE(detect_coordinated_action(one, {95, 110}, DetectorParams{}).has_value());

  // Two participants only (below coord_min_participants = 3).
  SessionStreams two = {
      {"a", {{"a", 100, 101.5, -18, -15}}},
      {"b", {{"b", 100.1, 101.7, -18, -15}}},
  };
  CHECK_FALSE(detect_coordinated_action(two, {95, 110}, DetectorParams{}).has_value());
}

TEST_CASE("detect_coordinated_action: long uncorrelated turns are not bursts") {
  // Two long (> coord_max_burst) overlapping turns plus one short one; the
  // direct correlation of the long pair is irrelevant because they are
  // filtered by length before the envelope check.
  SessionStreams streams = {
      {"a", {{"a", 100, 106, -18, -15}}},
      {"b", {{"b", 100.2, 107, -18, -15}}},
      {"c", {{"c", 100.1, 101.5, -18, -15}}},
  };
  const auto cue = detect_coordinated_action(streams, {95, 110}, DetectorParams{});
  CHECK_FALSE(cue.has_value());

  // Oracle: the only burst-eligible onset group has one member.
  int bursts = 0;
  DetectorParams p;
  for (const auto& s : streams) {
    for (const auto& seg : s.segments) {
      if (seg.duration() <= p.coord_max_burst) ++bursts;
    }
  }
  CHECK(bursts == 1);
}

TEST_CASE("coord monotonicity: raising coord_corr_min never adds cues") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    SessionStreams streams;
    const int n = 3 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      const ParticipantId p = "p" + std::to_string(i + 1);
      const double onset = 50.0 + rng.uniform(0, 0.6);
      const double len = rng.uniform(0.8, 2.8);
      streams.push_back({p, {{p, onset, onset + len, -18, -15}}});
    }
    int prev = 2;
    for (double corr : {0.0, 0.3, 0.6, 0.9}) {
      DetectorParams p;
      p.coord_corr_min = corr;
      const int now = detect_coordinated_action(streams, {45, 60}, p).has_value() ? 1 : 0;
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("mean_envelope_correlation: identical vs disjoint") {
  SessionStreams same = {
      {"a", {{"a", 10, 12, -18, -15}}},
      {"b", {{"b", 10, 12, -18, -15}}},
  };
  CHECK(mean_envelope_correlation(same, {9.5, 12.5}) == doctest::Approx(1.0));

  SessionStreams disjoint = {
      {"a", {{"a", 10, 11, -18, -15}}},
      {"b", {{"b", 11.5, 12.5, -18, -15}}},
  };
  CHECK(mean_envelope_correlation(disjoint, {9.5, 13.0}) < 0.0);
}

TEST_CASE("detect_schism_confirmation: adjacency plus sustained overlap") {
  DetectorParams params;  // confirm_max_gap 2
  const Turn initiating = make_turn("n", 10.0, 12.8, -20, true);

  // Responder j answers 0.2 s after the initiating turn ends, then the pair
  // keeps talking in parallel with the ongoing floor.
  std::vector<Turn> subsequent = {
      make_turn("j", 13.0, 15.5, -20, false),
      make_turn("n", 15.8, 18.0, -20, false),
      make_turn("j", 18.3, 20.5, -20, false),
  };
  SessionStreams ongoing = {
      {"h", {{"h", 12.5, 16.0, -20, -18}, {"h", 18.0, 21.0, -20, -18}}},
      {"z", {{"z", 16.2, 17.9, -20, -18}}},
  };
  const auto cue = detect_schism_confirmation(initiating, subsequent, ongoing, params);
  REQUIRE(cue.has_value());
  CHECK(cue->kind == CueKind::Confirm);
  CHECK(cue->t == doctest::Approx(13.0));
  CHECK(cue->initiator == "n");
  REQUIRE(cue->responders.size() == 1);
  CHECK(*cue->responders.begin() == "j");
  CHECK(cue->strength == doctest::Approx(0.8));
}

TEST_CASE("detect_schism_confirmation: no response within the gap") {
  DetectorParams params;
  const Turn initiating = make_turn("n", 10.0, 12.8, -20, true);
  // The only other turn starts 3 s after the initiating turn ends.
  std::vector<Turn> subsequent = {make_turn("j", 15.9, 18.0, -20, true)};
  SessionStreams ongoing = {{"h", {{"h", 12.0, 20.0, -20, -18}}}};
  CHECK_FALSE(detect_schism_confirmation(initiating, subsequent, ongoing, params).has_value());
}

TEST_CASE("detect_schism_confirmation: response without sustained overlap") {
  DetectorParams params;
  const Turn initiating = make_turn("n", 10.0, 12.8, -20, true);
  std::vector<Turn> subsequent = {
      make_turn("j", 13.0, 15.5, -20, true),
      make_turn("n", 15.8, 18.0, -20, true),
  };
  // The old floor fell silent right away: continuation, not schism.
  SessionStreams ongoing = {{"h", {{"h", 9.0, 12.9, -20, -18}}}};
  CHECK_FALSE(detect_schism_confirmation(initiating, subsequent, ongoing, params).has_value());
}

TEST_CASE("BaselineTracker: running median over the horizon") {
  BaselineTracker tracker(120.0);
  CHECK_FALSE(tracker.baseline("a", 50.0).has_value());

  // 3 turns x 2 s at -20: only 6 s of speech, median -20.
  for (int i = 0; i < 3; ++i) {
    tracker.add_turn(make_turn("a", i * 10.0, i * 10.0 + 2.0, -20, true));
  }
  auto b = tracker.baseline("a", 50.0);
  REQUIRE(b.has_value());
  CHECK(*b == doctest::Approx(-20.0));

  // Less than 5 s of speech is not enough.
  BaselineTracker thin(120.0);
  thin.add_turn(make_turn("a", 0, 2, -20, true));
  thin.add_turn(make_turn("a", 5, 7, -20, true));
  CHECK_FALSE(thin.baseline("a", 20.0).has_value());

  // Old entries age out of the horizon.
  BaselineTracker aging(30.0);
  for (int i = 0; i < 4; ++i) aging.add_turn(make_turn("a", i * 5.0, i * 5.0 + 2.0, -40, true));
  for (int i = 0; i < 4; ++i) {
    aging.add_turn(make_turn("a", 100 + i * 5.0, 100 + i * 5.0 + 2.0, -10, true));
  }
  auto recent = aging.baseline("a", 120.0);
  REQUIRE(recent.has_value());
  CHECK(*recent == doctest::Approx(-10.0));
}

TEST_CASE("cue strengths always land in [0,1]") {
  Rng rng(77);
  DetectorParams params;
  for (int trial = 0; trial < 300; ++trial) {
    const double e = rng.uniform(-60, -5);
    const Turn turn = make_turn("s", 0, 2, e, rng.chance(0.5));
    if (auto cue = detect_aside_cue(turn, rng.uniform(-40, -10), params)) {
      CHECK(cue->strength >= 0.0);
      CHECK(cue->strength <= 1.0);
      CHECK(cue->valid());
    }
    std::vector<TokenAnnotation> tokens;
    const int n = static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) tokens.push_back(tok("s", rng.uniform(0, 2), "kim", true));
    if (auto cue = detect_sit_cue(turn, tokens, params)) {
      CHECK(cue->strength >= 0.0);
      CHECK(cue->strength <= 1.0);
      CHECK(cue->valid());
    }
  }
}
