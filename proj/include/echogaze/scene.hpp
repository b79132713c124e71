#pragma once

#include "echogaze/frame_config.hpp"
#include "echogaze/protocol.hpp"

#include <array>
#include <string>
#include <vector>

namespace echogaze {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// A small acoustic reflector whose position follows gaze linearly.
// displacement(gx, gy) = gx * gaze_coupling[0] + gy * gaze_coupling[1],
// with (gx, gy) the gaze in normalized screen coordinates [-1, 1].
struct ReflectorSpec {
    Vec3 center;
    double radius_gain = 1.0;  // unitless scattering gain
    std::array<std::array<double, 3>, 2> gaze_coupling{{{0, 0, 0}, {0, 0, 0}}};
    double amplitude = 1.0;    // in (0, 1]
    std::array<double, 2> speaker_weights{1.0, 1.0};

    Vec3 position(double gx, double gy) const;
    double max_displacement_m() const;
};

struct NoiseProfile {
    enum class Kind { White, Recorded };
    Kind kind = Kind::White;
    double target_level_dba = 0.0;  // 0 = silent reference, no noise added
    std::vector<double> reference_samples;  // recorded kind only
    std::string reference_path;

    void validate() const;
};

// Head-frame geometry (meters): x right, y up, z toward the screen.
struct SceneSpec {
    std::vector<Vec3> mics;      // 8 in the default scene
    std::vector<Vec3> speakers;  // 2: right (band 1), left (band 2)
    std::vector<ReflectorSpec> reflectors;
    double base_delay_jitter_s = 4.0e-5;  // remount offset bound (+-2 samples at 50 kHz)
    NoiseProfile noise;                   // applied to synthesized sessions
    double tx_gain = 2.0e-4;              // unitless transmit gain in [0, 1]
    double direct_path_gain = 1.0;        // scales the speaker->mic path
    ScreenGeometry screen;                // gaze normalization for the couplings

    void validate(const FrameConfig& cfg) const;
    std::string to_json() const;
    static SceneSpec from_json(const std::string& text);
    static SceneSpec load(const std::string& path);
    void save(const std::string& path) const;
};

// Desk-scale glasses scene: two corneal reflectors driven by gaze, two eyelid
// reflectors with a weaker vertical coupling, and a static nose-bridge
// reflector as clutter.
SceneSpec default_scene();

} // namespace echogaze
