#pragma once

#include "echogaze/frame_config.hpp"
#include "echogaze/protocol.hpp"
#include "echogaze/scene.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

// audio.pcm: int16 little-endian, channels interleaved.
void write_pcm_int16(const std::string& path, const std::vector<std::vector<double>>& channels);
std::vector<std::vector<double>> read_pcm_int16(const std::string& path, int n_channels);

// Snap synthesized audio onto the int16 grid so in-memory pipelines match
// what a write/read round trip would produce exactly.
void int16_snap(std::vector<std::vector<double>>& channels);

// labels.csv: frame_index,x_px,y_px
void write_labels_csv(const std::string& path, const std::vector<std::pair<double, double>>& labels);
std::vector<std::pair<double, double>> read_labels_csv(const std::string& path);

struct SessionMeta {
    FrameConfig cfg;
    SceneSpec scene;
    uint64_t seed = 0;
    int n_channels = 0;
    int n_frames = 0;
    std::string config_hash_hex;
};

struct SessionBundle {
    std::vector<std::vector<double>> audio;
    std::vector<std::pair<double, double>> labels;
    SessionMeta meta;
};

// Writes audio.pcm, labels.csv and meta.json into `dir` (created if needed).
void write_session(const std::string& dir, const std::vector<std::vector<double>>& audio,
                   const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
                   const SceneSpec& scene, uint64_t seed);

// Validated load: missing files, truncated audio, meta/channel mismatches and
// a stale config hash are all IoErrors.
SessionBundle load_session(const std::string& dir);

} // namespace echogaze
