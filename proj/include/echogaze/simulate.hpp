#pragma once

#include "echogaze/frame_config.hpp"
#include "echogaze/scene.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace echogaze {

// White-noise dB(A) reference mapping: a full-scale RMS of 1.0 reads
// 94 dB, and flat noise over the audio band picks up a fixed -2 dB
// A-weighting correction. Recorded samples scale by plain RMS against the
// 94 dB reference. target_level_dba == 0 is the silent reference (no-op).
double noise_rms_for_level(const NoiseProfile& noise);
double measure_level_dba(const std::vector<double>& noise_only, NoiseProfile::Kind kind);

// Adds noise scaled to the target level; the original signal is untouched
// otherwise. Deterministic given seed.
std::vector<double> overlay_noise(const std::vector<double>& audio, const NoiseProfile& noise,
                                  uint64_t seed);
std::vector<std::vector<double>> overlay_noise_multi(const std::vector<std::vector<double>>& audio,
                                                     const NoiseProfile& noise, uint64_t seed);

struct SynthesizedSession {
    std::vector<std::vector<double>> mics;  // one stream per microphone
    double jitter_samples = 0.0;            // drawn remount offset
};

// Per frame and mic:
//   rx = sum_speakers sum_reflectors amp/(path^2) * tx shifted by the
//        round-trip delay (fractional shifts via linear interpolation)
//      + direct speaker->mic term + noise.
// Reflector positions follow gaze_coupling applied to the frame's gaze.
// Frames repeat the identical chirp, so a static scene is an exact circular
// shift; gaze changes take effect at frame boundaries.
SynthesizedSession synthesize_session(const SceneSpec& scene,
                                      const std::vector<std::pair<double, double>>& gaze_trace_px,
                                      const FrameConfig& cfg,
                                      uint64_t seed);

} // namespace echogaze
