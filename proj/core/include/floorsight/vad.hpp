#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "floorsight/types.hpp"

namespace floorsight {

// One analysis frame: t is the frame start, e the RMS energy in dBFS over
// [t, t + frame_window).
struct EnergyFrame {
  double t = 0.0;
  double e = 0.0;
};

struct VadParams {
  double frame_window = 0.030;    // seconds
  double hop = 0.010;             // seconds
  double threshold_offset = 6.0;  // dB above the estimated noise floor
  double hangover = 0.200;        // gaps shorter than this merge adjacent runs
  double min_segment = 0.100;     // shorter segments are dropped

  bool valid() const {
    return frame_window > 0 && hop > 0 && threshold_offset > 0 && hangover >= hop &&
           min_segment > 0;
  }
};

// Silence clamp: RMS 0 maps to this instead of -inf.
inline constexpr double kSilenceFloorDb = -120.0;

// Frame RMS energy of a mono stream. Samples are full-scale-normalized
// ([-1,1]); frame k covers [k*hop, k*hop + frame_window) and only complete
// frames are emitted. Throws SIGNAL_CORRUPT on non-finite samples.
std::vector<EnergyFrame> compute_frame_energy(std::span<const float> samples, double rate,
                                              const VadParams& params);

// PCM16 convenience overload (normalized by 32768).
std::vector<EnergyFrame> compute_frame_energy(std::span<const int16_t> samples, double rate,
                                              const VadParams& params);

// 10th percentile of frame energies. Throws EMPTY_INPUT on an empty list.
double estimate_noise_floor(const std::vector<EnergyFrame>& frames);

// Energy-threshold segmentation: a frame is voiced iff e >= floor + offset;
// voiced runs closer than `hangover` merge; segments shorter than
// `min_segment` are dropped. When noise_floor is not given it is estimated
// from the frames themselves.
SegmentList detect_segments(const std::vector<EnergyFrame>& frames, const VadParams& params,
                            const ParticipantId& participant,
                            std::optional<double> noise_floor = std::nullopt);

}  // namespace floorsight
