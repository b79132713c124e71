#pragma once

#include "echogaze/frame_config.hpp"
#include "echogaze/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

// Symmetric per-tensor int8 quantization: value ~= data * scale.
struct QuantTensor {
    std::vector<int8_t> data;
    double scale = 1.0;
    std::vector<int> shape;
};

QuantTensor quantize(const std::vector<double>& x, std::vector<int> shape = {});
std::vector<double> dequantize(const QuantTensor& t);

// Compressed MCU-style instance: per frame and mic, corr_len + rows_used raw
// samples; the sliding dot product against the corr_len-sample chirp prefix
// yields rows_used + 1 positions, of which rows_used are kept.
struct CompressedInstanceSpec {
    int corr_len = 34;
    int rows_used = 30;
    int window_frames = 26;
    int n_mics = 8;

    int seg_len() const { return corr_len + rows_used; }  // 64 under defaults
    void validate(const FrameConfig& cfg) const;
};

// Cross-correlation expressed as the fixed-weight 1x1 conv of the MCU port.
// raw is stored mic-major: raw[(m*window_frames + f)*seg_len + s]; output is
// in model feature order: out[(m*window_frames + f)*rows_used + r] =
// sum_n raw[r+n, f, m] * tx[n], 32-bit accumulation (34*127*127 < 2^31).
std::vector<int32_t> corr_as_conv(const QuantTensor& raw, const QuantTensor& tx_weights,
                                  const CompressedInstanceSpec& spec);

struct ConvLayerSpec {
    int kernel_h = 1, kernel_w = 1;
    int stride_h = 1, stride_w = 1;
};

// MCU conv constraints: kernel 1x1 or 3x3, stride [1, 1].
std::vector<std::string> conv_constraint_check(const ConvLayerSpec& layer);

// The corr_len-sample transmit prefix used at both train and inference time.
std::vector<double> compressed_tx_prefix(const FrameConfig& cfg, const CompressedInstanceSpec& spec);

// Feature extraction shared by training (float route) and inference
// (quantized route). Band-pass is skipped on this path. range_origin is the
// direct-path row from the float pipeline; the rows_used window is centered
// inside the crop_full_px span.
std::vector<GazeInstance> assemble_compressed_instances(
    const std::vector<std::vector<double>>& mics,
    const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
    const CompressedInstanceSpec& spec, int range_origin, bool quantized, int stride = 1,
    int session_id = 0);

struct QuantFrameResult {
    int t_end = 0;
    std::pair<double, double> pred;
    double latency_ms = 0.0;
};

// Streaming per-frame pipeline: build the compressed instance, run
// corr_as_conv, dequantize, predict. Wall-clock latency per emitted frame.
std::vector<QuantFrameResult> quant_pipeline_predict(
    const std::vector<std::vector<double>>& mics, const FrameConfig& cfg,
    const CompressedInstanceSpec& spec, const ModelArtifact& model, int range_origin);

// .q8 dataset: the quantized raw windows as the conv stage consumes them,
// one record per instance (t_end, label, per-tensor scale, int8 data).
struct Q8Instance {
    int t_end = 0;
    double label_x = 0.0, label_y = 0.0;
    QuantTensor raw;
};

struct Q8File {
    CompressedInstanceSpec spec;
    int range_origin = 0;
    QuantTensor tx;
    std::vector<Q8Instance> instances;
};

void save_q8(const std::string& path, const std::vector<std::vector<double>>& mics,
             const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
             const CompressedInstanceSpec& spec, int range_origin, int stride);
Q8File load_q8(const std::string& path);

} // namespace echogaze
