#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace echogaze {

// One speaker's linear chirp band.
struct ChirpBand {
    double f_start_hz = 0.0;
    double f_end_hz = 0.0;
    int speaker_id = 0;
};

// Timing and geometry constants for the whole pipeline. One frame of the
// transmitted chirp is frame_len samples; the per-frame refresh rate is
// sample_rate_hz / frame_len (50000/600 -> 83.33 Hz).
struct FrameConfig {
    int sample_rate_hz = 50000;
    int frame_len = 600;
    std::vector<ChirpBand> bands{{18000.0, 21000.0, 1}, {21500.0, 24500.0, 2}};
    double window_s = 0.3;
    int crop_full_px = 70;
    int crop_used_px = 60;
    double speed_of_sound_m_s = 340.0;

    // floor(window_s * fs / frame_len) + 1; 26 under defaults.
    int window_frames() const;
    // Round-trip distance covered by one correlation row, in meters.
    double row_spacing_m() const;

    // Throws ConfigError when any invariant fails.
    void validate() const;

    std::string to_json() const;
    static FrameConfig from_json(const std::string& text);
    static FrameConfig load(const std::string& path);
    void save(const std::string& path) const;
};

double refresh_rate(const FrameConfig& cfg);

// FNV-1a of the canonical JSON form; embedded in every derived artifact.
uint64_t config_hash(const FrameConfig& cfg);
std::string config_hash_hex(const FrameConfig& cfg);

} // namespace echogaze
