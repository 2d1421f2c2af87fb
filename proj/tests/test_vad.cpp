#include <doctest.h>

#include <cmath>
#include <vector>

#include "floorsight/errors.hpp"
#include "floorsight/rng.hpp"
#include "floorsight/vad.hpp"

using namespace floorsight;

namespace {

// Naive per-frame RMS reference.
std::vector<double> reference_frame_db(const std::vector<float>& samples, double rate,
                                       const VadParams& p) {
  const size_t win = std::lround(p.frame_window * rate);
  const size_t hop = std::lround(p.hop * rate);
  std::vector<double> out;
  for (size_t start = 0; start + win <= samples.size(); start += hop) {
    double acc = 0;
    for (size_t i = start; i < start + win; ++i) acc += double(samples[i]) * samples[i];
    const double rms = std::sqrt(acc / win);
    out.push_back(std::max(-120.0, rms > 0 ? 20 * std::log10(rms) : -120.0));
  }
  return out;
}

// Frame-labeling reference for detect_segments: label every frame, then scan
// and merge, dropping short results.
SegmentList reference_segments(const std::vector<EnergyFrame>& frames, const VadParams& p,
                               double floor_db) {
  const double threshold = floor_db + p.threshold_offset;
  std::vector<char> voiced(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) voiced[i] = frames[i].e >= threshold;

  struct Span {
    double t0, t1;
  };
  std::vector<Span> runs;
  for (size_t i = 0; i < frames.size(); ++i) {
    if (!voiced[i]) continue;
    if (!runs.empty() && std::abs(frames[i].t - runs.back().t1) < 1e-9) {
      runs.back().t1 = frames[i].t + p.hop;
    } else {
      runs.push_back({frames[i].t, frames[i].t + p.hop});
    }
  }
  std::vector<Span> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.t0 - merged.back().t1 < p.hangover) {
      merged.back().t1 = r.t1;
    } else {
      merged.push_back(r);
    }
  }
  SegmentList out;
  for (const auto& m : merged) {
    if (m.t1 - m.t0 >= p.min_segment) out.push_back({"x", m.t0, m.t1, 0, 0});
  }
  return out;
}

std::vector<EnergyFrame> constant_frames(double db, double seconds, double hop = 0.01) {
  std::vector<EnergyFrame> frames;
  const int n = std::lround(seconds / hop);
  for (int i = 0; i < n; ++i) frames.push_back({i * hop, db});
  return frames;
}

}  // namespace

TEST_CASE("compute_frame_energy: silence clamps to -120") {
  std::vector<float> zeros(16000, 0.0f);
  const auto frames = compute_frame_energy(std::span<const float>(zeros), 16000, VadParams{});
  REQUIRE_FALSE(frames.empty());
  for (const auto& f : frames) CHECK(f.e == doctest::Approx(-120.0));
}

TEST_CASE("compute_frame_energy: full-scale square wave is 0 dBFS") {
  std::vector<float> square(16000);
  for (size_t i = 0; i < square.size(); ++i) square[i] = (i / 40) % 2 ? 1.0f : -1.0f;
  const auto frames = compute_frame_energy(std::span<const float>(square), 16000, VadParams{});
  REQUIRE_FALSE(frames.empty());
  for (const auto& f : frames) CHECK(f.e == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("compute_frame_energy: empty and corrupt input") {
  std::vector<float> empty;
  CHECK(compute_frame_energy(std::span<const float>(empty), 16000, VadParams{}).empty());

  std::vector<float> bad(1000, 0.1f);
  bad[500] = std::nanf("");
  CHECK_THROWS_WITH_AS(compute_frame_energy(std::span<const float>(bad), 16000, VadParams{}),
                       doctest::Contains("SIGNAL_CORRUPT"), Error);
}

TEST_CASE("compute_frame_energy matches the naive RMS reference") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> samples(static_cast<size_t>(rng.uniform(500, 20000)));
    for (auto& s : samples) s = static_cast<float>(rng.uniform(-1.0, 1.0));
    const double rate = 16000;
    const auto frames = compute_frame_energy(std::span<const float>(samples), rate, VadParams{});
    const auto expected = reference_frame_db(samples, rate, VadParams{});
    REQUIRE(frames.size() == expected.size());
    for (size_t i = 0; i < frames.size(); ++i) {
      CHECK(frames[i].e == doctest::Approx(expected[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("estimate_noise_floor: constants and percentile definition") {
  CHECK(estimate_noise_floor(constant_frames(-60, 1.0)) == doctest::Approx(-60));

  std::vector<EnergyFrame> frames;
  for (int i = 0; i < 90; ++i) frames.push_back({i * 0.01, -60});
  for (int i = 90; i < 100; ++i) frames.push_back({i * 0.01, -10});
  CHECK(estimate_noise_floor(frames) == doctest::Approx(-60));

  CHECK_THROWS_AS(estimate_noise_floor({}), Error);
}

TEST_CASE("estimate_noise_floor matches a full-sort oracle exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EnergyFrame> frames;
    const int n = 1 + static_cast<int>(rng.below(500));
    for (int i = 0; i < n; ++i) frames.push_back({i * 0.01, rng.uniform(-90, -10)});
    std::vector<double> sorted;
    for (const auto& f : frames) sorted.push_back(f.e);
    std::sort(sorted.begin(), sorted.end());
    const double expected = sorted[static_cast<size_t>(std::floor(0.1 * (n - 1)))];
    CHECK(estimate_noise_floor(frames) == expected);
  }
}

TEST_CASE("detect_segments: steady speech over a quiet floor") {
  const auto frames = constant_frames(-10, 5.0);
  const auto segs = detect_segments(frames, VadParams{}, "p1", -60.0);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].t0 == doctest::Approx(0.0));
  CHECK(segs[0].t1 == doctest::Approx(5.0));
  CHECK(segs[0].e_mean == doctest::Approx(-10.0));
  CHECK(segs[0].e_peak == doctest::Approx(-10.0));
  CHECK(segs[0].participant == "p1");
}

TEST_CASE("detect_segments: sub-threshold input yields nothing") {
  const auto frames = constant_frames(-80, 5.0);
  CHECK(detect_segments(frames, VadParams{}, "p1", -60.0).empty());
}

TEST_CASE("detect_segments: hangover merges a 150 ms dip, keeps a 300 ms gap") {
  auto make = [&](double gap) {
    std::vector<EnergyFrame> frames;
    double t = 0;
    for (; t < 1.0; t += 0.01) frames.push_back({t, -10});
    for (; t < 1.0 + gap; t += 0.01) frames.push_back({t, -80});
    for (; t < 2.0 + gap; t += 0.01) frames.push_back({t, -10});
    return frames;
  };
  CHECK(detect_segments(make(0.15), VadParams{}, "p1", -60.0).size() == 1);
  CHECK(detect_segments(make(0.30), VadParams{}, "p1", -60.0).size() == 2);
}

TEST_CASE("detect_segments matches the frame-labeling reference") {
  Rng rng(99);
  VadParams params;
  for (int trial = 0; trial < 1000; ++trial) {
    // On/off pattern with random burst and pause lengths.
    std::vector<EnergyFrame> frames;
    double t = 0;
    while (t < 20.0) {
      const double burst = rng.uniform(0.02, 1.5);
      const double pause = rng.uniform(0.02, 1.0);
      for (double end = t + burst; t < end; t += params.hop) {
        frames.push_back({t, rng.uniform(-45, -10)});
      }
      for (double end = t + pause; t < end; t += params.hop) {
        frames.push_back({t, rng.uniform(-90, -70)});
      }
    }
    // Re-grid times to exact multiples of hop.
    for (size_t i = 0; i < frames.size(); ++i) frames[i].t = i * params.hop;

    const double floor_db = -70.0;
    const auto got = detect_segments(frames, params, "p1", floor_db);
    const auto expected = reference_segments(frames, params, floor_db);
    REQUIRE(got.size() == expected.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(std::abs(got[i].t0 - expected[i].t0) <= params.hop + 1e-9);
      CHECK(std::abs(got[i].t1 - expected[i].t1) <= params.hop + 1e-9);
    }
  }
}

TEST_CASE("detect_segments: raising the threshold never increases voiced time") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EnergyFrame> frames;
    for (int i = 0; i < 2000; ++i) frames.push_back({i * 0.01, rng.uniform(-90, -10)});
    double prev_total = 1e9;
    for (double offset : {3.0, 6.0, 9.0, 12.0}) {
      VadParams p;
      p.threshold_offset = offset;
      double total = 0;
      for (const auto& s : detect_segments(frames, p, "p1", -70.0)) total += s.duration();
      CHECK(total <= prev_total + 1e-9);
      prev_total = total;
    }
  }
}

TEST_CASE("detect_segments: segments reconstructed from own output round-trip") {
  Rng rng(5);
  VadParams params;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EnergyFrame> frames;
    double t = 0;
    while (t < 15.0) {
      const double burst = rng.uniform(0.3, 2.0);
      const double pause = rng.uniform(0.3, 1.2);
      for (double end = t + burst; t < end; t += params.hop) frames.push_back({t, -15});
      for (double end = t + pause; t < end; t += params.hop) frames.push_back({t, -90});
    }
    for (size_t i = 0; i < frames.size(); ++i) frames[i].t = i * params.hop;

    const auto first = detect_segments(frames, params, "p1", -70.0);

    // Rectangular reconstruction from the detected segments.
    std::vector<EnergyFrame> rebuilt;
    for (size_t i = 0; i < frames.size(); ++i) {
      const double tt = i * params.hop;
      double e = -90;
      for (const auto& s : first) {
        if (tt >= s.t0 && tt < s.t1) e = s.e_mean;
      }
      rebuilt.push_back({tt, e});
    }
    const auto second = detect_segments(rebuilt, params, "p1", -70.0);
    REQUIRE(second.size() == first.size());
    for (size_t i = 0; i < first.size(); ++i) {
      CHECK(std::abs(first[i].t0 - second[i].t0) <= params.hop + 1e-9);
      CHECK(std::abs(first[i].t1 - second[i].t1) <= params.hop + 1e-9);
    }
  }
}
