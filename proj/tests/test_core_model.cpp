#include <doctest.h>

#include <algorithm>
#include <map>

#include "floorsight/rng.hpp"
#include "floorsight/types.hpp"
#include "floorsight/validate.hpp"

using namespace floorsight;

namespace {

// Independent O(n^2) checker: every intersecting same-participant pair, plus
// the per-interval endpoint and span checks.
struct OracleCounts {
  int overlap = 0, out_of_span = 0, empty = 0, bad_order = 0;
  std::vector<std::pair<double, double>> overlap_regions;
};

OracleCounts brute_force_check(const std::vector<AffiliationInterval>& labels, double span) {
  OracleCounts c;
  for (const auto& iv : labels) {
    if (iv.t1 < iv.t0) ++c.bad_order;
    else if (iv.t1 == iv.t0) ++c.empty;
    if (std::min(iv.t0, iv.t1) < 0 || std::max(iv.t0, iv.t1) > span) ++c.out_of_span;
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    for (size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i].participant != labels[j].participant) continue;
      const double lo = std::max(labels[i].t0, labels[j].t0);
      const double hi = std::min(labels[i].t1, labels[j].t1);
      if (hi > lo) {
        ++c.overlap;
        c.overlap_regions.push_back({lo, hi});
      }
    }
  }
  std::sort(c.overlap_regions.begin(), c.overlap_regions.end());
  return c;
}

OracleCounts count_report(const ValidationReport& report) {
  OracleCounts c;
  for (const auto& v : report.violations) {
    switch (v.code) {
      case ViolationCode::Overlap: ++c.overlap; break;
      case ViolationCode::OutOfSpan: ++c.out_of_span; break;
      case ViolationCode::Empty: ++c.empty; break;
      case ViolationCode::BadOrder: ++c.bad_order; break;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("participant id validity") {
  CHECK(is_valid_participant_id("p1"));
  CHECK(is_valid_participant_id("alice"));
  CHECK_FALSE(is_valid_participant_id(""));
  CHECK_FALSE(is_valid_participant_id("a,b"));
  CHECK_FALSE(is_valid_participant_id("a b"));
  CHECK_FALSE(is_valid_participant_id("a\tb"));
}

TEST_CASE("validate_label_set: empty set is vacuously valid") {
  CHECK(validate_label_set({}, 10.0).ok());
}

TEST_CASE("validate_label_set: overlapping intervals of one participant") {
  std::vector<AffiliationInterval> labels = {
      {"P1", FloorId{1}, 0, 5},
      {"P1", FloorId{2}, 3, 8},
  };
  const auto report = validate_label_set(labels, 10.0);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].code == ViolationCode::Overlap);
  CHECK(report.violations[0].detail.find("[3,5]") != std::string::npos);
}

TEST_CASE("validate_label_set: same spans on different participants are fine") {
  std::vector<AffiliationInterval> labels = {
      {"P1", FloorId{1}, 0, 5},
      {"P2", FloorId{1}, 0, 5},
  };
  CHECK(validate_label_set(labels, 10.0).ok());
}

TEST_CASE("validate_label_set: endpoint and span codes") {
  const auto r1 = validate_label_set({{"P1", FloorId{1}, 5, 5}}, 10.0);
  REQUIRE(r1.violations.size() == 1);
  CHECK(r1.violations[0].code == ViolationCode::Empty);

  const auto r2 = validate_label_set({{"P1", FloorId{1}, 6, 4}}, 10.0);
  REQUIRE_FALSE(r2.ok());
  CHECK(r2.violations[0].code == ViolationCode::BadOrder);

  const auto r3 = validate_label_set({{"P1", FloorId{1}, 8, 12}}, 10.0);
  REQUIRE(r3.violations.size() == 1);
  CHECK(r3.violations[0].code == ViolationCode::OutOfSpan);

  const auto r4 = validate_label_set({{"P1", FloorId{1}, -1, 2}}, 10.0);
  REQUIRE(r4.violations.size() == 1);
  CHECK(r4.violations[0].code == ViolationCode::OutOfSpan);
}

TEST_CASE("validate_label_set matches the brute-force pairwise checker") {
  Rng rng(20240901);
  for (int trial = 0; trial < 1000; ++trial) {
    const double span = rng.uniform(5.0, 60.0);
    const int n = static_cast<int>(rng.below(30));
    std::vector<AffiliationInterval> labels;
    for (int i = 0; i < n; ++i) {
      AffiliationInterval iv;
      iv.participant = "p" + std::to_string(rng.below(4) + 1);
      iv.floor = FloorId{static_cast<int>(rng.below(3)) + 1};
      iv.t0 = rng.uniform(-2.0, span);
      // Mix of proper, empty, reversed and out-of-span intervals.
      const double roll = rng.uniform();
      if (roll < 0.05) {
        iv.t1 = iv.t0;
      } else if (roll < 0.10) {
        iv.t1 = iv.t0 - rng.uniform(0.1, 2.0);
      } else {
        iv.t1 = iv.t0 + rng.uniform(0.1, span / 2);
      }
      labels.push_back(iv);
    }
    const OracleCounts expected = brute_force_check(labels, span);
    const OracleCounts actual = count_report(validate_label_set(labels, span));
    CHECK(actual.overlap == expected.overlap);
    CHECK(actual.out_of_span == expected.out_of_span);
    CHECK(actual.empty == expected.empty);
    CHECK(actual.bad_order == expected.bad_order);
  }
}

TEST_CASE("voiced_seconds clips to the window") {
  SegmentList segs = {{"a", 0, 2, -20, -18}, {"a", 3, 5, -20, -18}};
  CHECK(voiced_seconds(segs, 0, 10) == doctest::Approx(4.0));
  CHECK(voiced_seconds(segs, 1, 4) == doctest::Approx(2.0));
  CHECK(voiced_seconds(segs, 2, 3) == doctest::Approx(0.0));
}
