#include <benchmark/benchmark.h>

#include "floorsight/engine.hpp"
#include "floorsight/simulator.hpp"
#include "floorsight/turns.hpp"
#include "floorsight/vad.hpp"

using namespace floorsight;

namespace {

SimOutput session_5min() {
  static SimOutput out = simulate_session(preset("youth"), 300.0, 7);
  return out;
}

void BM_infer_session(benchmark::State& state) {
  const SimOutput sim = session_5min();
  std::vector<const VadSegment*> items;
  for (const auto& s : sim.segments) {
    for (const auto& seg : s.segments) items.push_back(&seg);
  }
  std::sort(items.begin(), items.end(),
            [](const VadSegment* a, const VadSegment* b) { return a->t0 < b->t0; });
  for (auto _ : state) {
    FloorEngine engine(sim.participants, EngineConfig{});
    engine.set_tokens(sim.tokens);
    for (const VadSegment* seg : items) engine.ingest(*seg);
    engine.finish();
    benchmark::DoNotOptimize(engine.drain_events());
  }
}
BENCHMARK(BM_infer_session)->Unit(benchmark::kMillisecond);

void BM_detect_segments(benchmark::State& state) {
  const SimOutput sim = session_5min();
  const auto frames = rectangular_frames(sim.segments[0].segments, 0.01, 300.0);
  VadParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_segments(frames, params, "p1"));
  }
}
BENCHMARK(BM_detect_segments)->Unit(benchmark::kMicrosecond);

void BM_windowed_features(benchmark::State& state) {
  const SimOutput sim = session_5min();
  TurnParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(windowed_features(sim.segments, {100.0, 105.0}, params));
  }
}
BENCHMARK(BM_windowed_features)->Unit(benchmark::kMicrosecond);

void BM_simulate_minute(benchmark::State& state) {
  const SimPreset p = preset("youth");
  uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_session(p, 60.0, seed++));
  }
}
BENCHMARK(BM_simulate_minute)->Unit(benchmark::kMillisecond);

}  // namespace
