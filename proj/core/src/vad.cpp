#include "floorsight/vad.hpp"

#include <algorithm>
#include <cmath>

#include "floorsight/errors.hpp"

namespace floorsight {

namespace {

std::vector<EnergyFrame> frame_energy_impl(std::span<const float> samples, double rate,
                                           const VadParams& params, double scale) {
  if (rate <= 0) throw Error(ErrorCode::BadArgument, "sample rate must be positive");
  if (!params.valid()) throw Error(ErrorCode::BadArgument, "invalid VAD params");

  const size_t win = std::max<size_t>(1, static_cast<size_t>(std::lround(params.frame_window * rate)));
  const size_t hop = std::max<size_t>(1, static_cast<size_t>(std::lround(params.hop * rate)));

  std::vector<EnergyFrame> frames;
  if (samples.size() < win) return frames;

  for (const float s : samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::SignalCorrupt, "non-finite sample");
  }

  const size_t count = (samples.size() - win) / hop + 1;
  frames.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    const size_t start = k * hop;
    double acc = 0.0;
    for (size_t i = start; i < start + win; ++i) {
      const double v = samples[i] * scale;
      acc += v * v;
    }
    const double rms = std::sqrt(acc / static_cast<double>(win));
    const double db = rms > 0.0 ? 20.0 * std::log10(rms) : kSilenceFloorDb;
    frames.push_back({static_cast<double>(k) * params.hop, std::max(db, kSilenceFloorDb)});
  }
  return frames;
}

}  // namespace

std::vector<EnergyFrame> compute_frame_energy(std::span<const float> samples, double rate,
                                              const VadParams& params) {
  return frame_energy_impl(samples, rate, params, 1.0);
}

std::vector<EnergyFrame> compute_frame_energy(std::span<const int16_t> samples, double rate,
                                              const VadParams& params) {
  std::vector<float> norm(samples.begin(), samples.end());
  return frame_energy_impl(norm, rate, params, 1.0 / 32768.0);
}

double estimate_noise_floor(const std::vector<EnergyFrame>& frames) {
  if (frames.empty()) throw Error(ErrorCode::EmptyInput, "no frames for noise floor");
  std::vector<double> energies;
  energies.reserve(frames.size());
  for (const auto& f : frames) energies.push_back(f.e);
  const size_t idx = static_cast<size_t>(std::floor(0.1 * static_cast<double>(energies.size() - 1)));
  std::nth_element(energies.begin(), energies.begin() + idx, energies.end());
  return energies[idx];
}

SegmentList detect_segments(const std::vector<EnergyFrame>& frames, const VadParams& params,
                            const ParticipantId& participant,
                            std::optional<double> noise_floor) {
  SegmentList out;
  if (frames.empty()) return out;
  if (!params.valid()) throw Error(ErrorCode::BadArgument, "invalid VAD params");

  const double floor_db = noise_floor ? *noise_floor : estimate_noise_floor(frames);
  const double threshold = floor_db + params.threshold_offset;
  const double hop = params.hop;

  // Voiced runs as [first frame t, last frame t + hop), with energy stats
  // tracked over the voiced frames only.
  struct Run {
    double t0, t1;
    double sum_e, peak_e;
    size_t n;
  };
  std::vector<Run> runs;
  for (const auto& f : frames) {
    if (f.e < threshold) continue;
    if (!runs.empty() && f.t - runs.back().t1 < 1e-9) {
      Run& r = runs.back();
      r.t1 = f.t + hop;
      r.sum_e += f.e;
      r.peak_e = std::max(r.peak_e, f.e);
      r.n += 1;
    } else {
      runs.push_back({f.t, f.t + hop, f.e, f.e, 1});
    }
  }

  // Hangover: merge runs separated by gaps shorter than `hangover`. Gap
  // frames stay out of the energy stats.
  std::vector<Run> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.t0 - merged.back().t1 < params.hangover) {
      Run& m = merged.back();
      m.t1 = r.t1;
      m.sum_e += r.sum_e;
      m.peak_e = std::max(m.peak_e, r.peak_e);
      m.n += r.n;
    } else {
      merged.push_back(r);
    }
  }

  for (const auto& r : merged) {
    if (r.t1 - r.t0 < params.min_segment) continue;
    VadSegment seg;
    seg.participant = participant;
    seg.t0 = r.t0;
    seg.t1 = r.t1;
    seg.e_mean = r.sum_e / static_cast<double>(r.n);
    seg.e_peak = r.peak_e;
    out.push_back(seg);
  }
  return out;
}

}  // namespace floorsight
