#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

struct ScreenGeometry {
    int width_px = 1920;
    int height_px = 1080;
    double px_size_cm = 0.031;
    double eye_distance_cm = 60.0;

    void validate() const;
    std::string to_json() const;
    static ScreenGeometry from_json(const std::string& text);
    static ScreenGeometry load(const std::string& path);
};

struct ProtocolSpec {
    int n_regions = 100;        // perfect square; grid tiling of the screen
    double dwell_min_s = 0.5;
    double dwell_max_s = 3.5;
    double dwell_mean_s = 2.0;
    double calib_duration_s = 15.0;
    int sessions = 12;

    void validate() const;
};

enum class Segment : uint8_t { Calib = 0, Main = 1 };

// Frame-indexed gaze labels with calib/main annotations.
struct GazeTrace {
    std::vector<std::pair<double, double>> points;  // (x_px, y_px) per frame
    std::vector<Segment> segments;                  // same length
    int calib_frames = 0;                           // points[0..calib_frames) are calibration

    int n_frames() const { return static_cast<int>(points.size()); }
};

// Calibration sweep over the four corners plus the center, then every region
// once in random order, fixed at a uniform point inside the region for a
// triangular-distributed dwell. Transitions are instantaneous jumps.
GazeTrace generate_session_trace(const ScreenGeometry& geom, const ProtocolSpec& proto,
                                 double frames_per_second, uint64_t seed);

// Pixel -> cm relative to screen center; x right, y down.
std::pair<double, double> px_to_cm(const ScreenGeometry& geom, std::pair<double, double> p);

// Symmetric triangular dwell on [dwell_min_s, dwell_max_s]; exposed for the
// distribution tests.
double sample_dwell(const ProtocolSpec& proto, class Rng& rng);

void save_trace_csv(const std::string& path, const GazeTrace& trace);
GazeTrace load_trace_csv(const std::string& path);

} // namespace echogaze
