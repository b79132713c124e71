#pragma once

#include "echogaze/echo_profile.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

enum class ModelKind : uint16_t { Linear = 1, Gbrt = 2 };

// Instance tensor layout behind the flat feature vector; flattening is
// channel-major: feature = ch*(window_frames*rows) + frame*rows + row.
struct TensorShape {
    int window_frames = 0;
    int rows = 0;
    int channels = 0;
    int features() const { return window_frames * rows * channels; }
};

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;  // leaf payload (learning rate already applied)
    double gain = 0.0;   // squared-error reduction of this split
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(const float* x) const;
};

struct Ensemble {
    double init = 0.0;
    std::vector<Tree> trees;
    double predict(const float* x) const;
};

struct GbrtParams {
    int n_trees = 200;
    int max_depth = 3;
    double learning_rate = 0.1;
    double subsample = 0.8;
    int max_bins = 64;
    bool exact_splits = false;  // full sort-based greedy; the hist path is the fast default
    uint64_t seed = 0;

    void validate() const;
};

// Affine output correction fitted from per-session calibration data.
struct Calibration {
    std::array<std::array<double, 2>, 2> a{{{1.0, 0.0}, {0.0, 1.0}}};
    std::array<double, 2> b{0.0, 0.0};
    bool offset_only_fallback = false;

    std::pair<double, double> apply(std::pair<double, double> p) const {
        return {a[0][0] * p.first + a[0][1] * p.second + b[0],
                a[1][0] * p.first + a[1][1] * p.second + b[1]};
    }
};

struct ModelArtifact {
    ModelKind kind = ModelKind::Linear;
    TensorShape shape;
    uint64_t config_hash = 0;

    // Linear: per-feature normalization plus a dense weight matrix.
    std::vector<double> norm_mean, norm_std;
    std::vector<double> weights;  // [feature * 2 + coord]
    std::array<double, 2> intercept{0.0, 0.0};

    // GBRT: one boosted ensemble per output coordinate, raw features.
    GbrtParams gbrt_params;
    Ensemble ens_x, ens_y;

    Calibration calib;

    std::pair<double, double> predict_raw(const float* x, std::size_t n_features) const;
    std::pair<double, double> predict_raw(const GazeInstance& inst) const;

    void save(const std::string& path) const;
    static ModelArtifact load(const std::string& path);
};

ModelArtifact fit_linear(const std::vector<GazeInstance>& train, double l2, TensorShape shape,
                         uint64_t config_hash_value = 0);

ModelArtifact fit_gbrt(const std::vector<GazeInstance>& train, const GbrtParams& params,
                       TensorShape shape, uint64_t config_hash_value = 0);

// Raw model output passed through the calibration correction.
std::pair<double, double> predict(const ModelArtifact& model, const GazeInstance& inst);

struct CalibrationResult {
    bool offset_only_fallback = false;
};

// Least-squares affine from raw predictions to true labels; base parameters
// untouched. Collinear anchors fall back to an offset-only correction.
CalibrationResult calibrate(ModelArtifact& model, const std::vector<GazeInstance>& calib_instances);

struct ImportanceTable {
    std::vector<double> raw;     // per channel, unscaled impurity reduction
    std::vector<double> scaled;  // per channel, max scaled to 100
    std::vector<double> per_feature;  // unscaled, full feature resolution
};

// Impurity-based importance aggregated per (mic, band) channel; GBRT only.
ImportanceTable feature_importance(const ModelArtifact& model);

} // namespace echogaze
