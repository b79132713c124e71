#pragma once

#include "echogaze/metrics.hpp"
#include "echogaze/quant.hpp"
#include "echogaze/scene.hpp"
#include "echogaze/session_io.hpp"
#include "echogaze/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace echogaze {

// Parameters of one synthetic end-to-end run. The desk-scale default keeps
// the full 8-session / 6-train / 2-test structure with a shortened per-
// session protocol so a complete run stays within a few minutes.
struct RunSpec {
    int sessions = 8;
    int test_sessions = 2;   // fold 0 of a sessions/test_sessions split
    ProtocolSpec protocol;   // per-session instruction protocol
    int train_stride = 26;
    int test_stride = 26;
    int calib_stride = 13;
    double linear_l2 = 1.0;
    GbrtParams gbrt;
    bool run_linear = true;
    bool run_in_session = true;
    bool quant_compare = true;
    CompressedInstanceSpec quant_spec;
    bool noise_sweep = false;
    std::vector<double> noise_levels_dba = {54.5, 64.5, 65.6, 70.8};

    static RunSpec desk_default();
};

// simulate -> preprocess -> train -> calibrate -> evaluate, all seeded from
// one value. When out_dir is non-empty the run writes traces/, sessions/,
// profiles/, models/, report.json and errors.csv underneath it.
nlohmann::json run_end_to_end(const FrameConfig& cfg, const SceneSpec& scene, const RunSpec& spec,
                              uint64_t seed, const std::string& out_dir);

struct RealtimeBench {
    int frames = 0;
    double mean_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
    double fps_sustained = 0.0;
    double pred_checksum = 0.0;
};

// Streaming float path: per frame, band-pass all channels, correlate, update
// the sliding window, assemble the flattened tensor and predict. Setup
// (origin detection, filter warm-up) happens before timing starts.
RealtimeBench realtime_frame_bench(const std::vector<std::vector<double>>& mics,
                                   const FrameConfig& cfg, const ModelArtifact& model,
                                   bool filtered = true);

} // namespace echogaze
