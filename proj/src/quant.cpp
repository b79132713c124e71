#include "echogaze/quant.hpp"

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <cmath>

namespace echogaze {

QuantTensor quantize(const std::vector<double>& x, std::vector<int> shape) {
    if (x.empty()) throw ContractError("quantize: empty tensor");
    double max_abs = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) throw ContractError("quantize: non-finite input");
        max_abs = std::max(max_abs, std::fabs(v));
    }
    QuantTensor t;
    t.shape = std::move(shape);
    t.scale = max_abs > 0.0 ? max_abs / 127.0 : 1.0;
    t.data.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double q = std::round(x[i] / t.scale);
        t.data[i] = static_cast<int8_t>(std::clamp(q, -128.0, 127.0));
    }
    return t;
}

std::vector<double> dequantize(const QuantTensor& t) {
    std::vector<double> out(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) out[i] = t.data[i] * t.scale;
    return out;
}

void CompressedInstanceSpec::validate(const FrameConfig& cfg) const {
    if (corr_len < 1 || rows_used < 1 || window_frames < 1 || n_mics < 1)
        throw ConfigError("compressed instance dimensions must be positive");
    if (corr_len > cfg.frame_len) throw ConfigError("corr_len must not exceed frame_len");
    if (seg_len() > cfg.frame_len) throw ConfigError("compressed segment exceeds one frame");
}

std::vector<int32_t> corr_as_conv(const QuantTensor& raw, const QuantTensor& tx_weights,
                                  const CompressedInstanceSpec& spec) {
    const std::size_t want_raw = static_cast<std::size_t>(spec.seg_len()) * spec.window_frames * spec.n_mics;
    if (raw.data.size() != want_raw) throw ContractError("corr_as_conv: raw tensor shape mismatch");
    if (tx_weights.data.size() != static_cast<std::size_t>(spec.corr_len))
        throw ContractError("corr_as_conv: tx weight length mismatch");

    std::vector<int32_t> out(static_cast<std::size_t>(spec.rows_used) * spec.window_frames * spec.n_mics);
    const int seg = spec.seg_len();
    for (int m = 0; m < spec.n_mics; ++m)
        for (int f = 0; f < spec.window_frames; ++f) {
            const int8_t* src = raw.data.data() + (static_cast<std::size_t>(m) * spec.window_frames + f) * seg;
            int32_t* dst = out.data() + (static_cast<std::size_t>(m) * spec.window_frames + f) * spec.rows_used;
            for (int r = 0; r < spec.rows_used; ++r) {
                int32_t acc = 0;
                for (int n = 0; n < spec.corr_len; ++n)
                    acc += static_cast<int32_t>(src[r + n]) * static_cast<int32_t>(tx_weights.data[static_cast<std::size_t>(n)]);
                dst[r] = acc;
            }
        }
    return out;
}

std::vector<std::string> conv_constraint_check(const ConvLayerSpec& layer) {
    std::vector<std::string> violations;
    const bool k1 = layer.kernel_h == 1 && layer.kernel_w == 1;
    const bool k3 = layer.kernel_h == 3 && layer.kernel_w == 3;
    if (!k1 && !k3)
        violations.push_back("kernel size must be 1x1 or 3x3, got " + std::to_string(layer.kernel_h) +
                             "x" + std::to_string(layer.kernel_w));
    if (layer.stride_h != 1 || layer.stride_w != 1)
        violations.push_back("stride must be [1, 1], got [" + std::to_string(layer.stride_h) + ", " +
                             std::to_string(layer.stride_w) + "]");
    return violations;
}

std::vector<double> compressed_tx_prefix(const FrameConfig& cfg, const CompressedInstanceSpec& spec) {
    spec.validate(cfg);
    const auto chirp = generate_chirp(cfg.bands.at(0), cfg);
    return std::vector<double>(chirp.begin(), chirp.begin() + spec.corr_len);
}

namespace {

// Raw sample window start inside each frame: the rows_used rows sit centered
// in the crop_full_px span anchored on the direct-path origin.
int segment_offset(const FrameConfig& cfg, const CompressedInstanceSpec& spec, int range_origin) {
    const int centered = range_origin + (cfg.crop_full_px - spec.rows_used) / 2;
    return centered;
}

struct RawWindow {
    std::vector<double> values;  // mic-major [m][f][s], seg_len per (m,f)
};

RawWindow gather_window(const std::vector<std::vector<double>>& mics, const FrameConfig& cfg,
                        const CompressedInstanceSpec& spec, int t_end, int seg_off) {
    RawWindow w;
    const int seg = spec.seg_len();
    w.values.resize(static_cast<std::size_t>(spec.n_mics) * spec.window_frames * seg);
    for (int m = 0; m < spec.n_mics; ++m) {
        const auto& stream = mics[static_cast<std::size_t>(m)];
        for (int f = 0; f < spec.window_frames; ++f) {
            const int frame_idx = t_end - (spec.window_frames - 1) + f;
            const std::size_t base = static_cast<std::size_t>(frame_idx) * cfg.frame_len;
            double* dst = w.values.data() + (static_cast<std::size_t>(m) * spec.window_frames + f) * seg;
            for (int s = 0; s < seg; ++s) {
                const int pos = (seg_off + s) % cfg.frame_len;  // circular within the frame
                dst[s] = stream[base + static_cast<std::size_t>(pos)];
            }
        }
    }
    return w;
}

std::vector<float> float_features(const RawWindow& w, const std::vector<double>& tx,
                                  const CompressedInstanceSpec& spec) {
    std::vector<float> feat(static_cast<std::size_t>(spec.rows_used) * spec.window_frames * spec.n_mics);
    const int seg = spec.seg_len();
    for (int m = 0; m < spec.n_mics; ++m)
        for (int f = 0; f < spec.window_frames; ++f) {
            const double* src = w.values.data() + (static_cast<std::size_t>(m) * spec.window_frames + f) * seg;
            float* dst = feat.data() + (static_cast<std::size_t>(m) * spec.window_frames + f) * spec.rows_used;
            for (int r = 0; r < spec.rows_used; ++r) {
                double acc = 0.0;
                for (int n = 0; n < spec.corr_len; ++n) acc += src[r + n] * tx[static_cast<std::size_t>(n)];
                dst[r] = static_cast<float>(acc);
            }
        }
    return feat;
}

std::vector<float> quantized_features(const RawWindow& w, const QuantTensor& qtx,
                                      const CompressedInstanceSpec& spec) {
    QuantTensor qraw = quantize(w.values, {spec.n_mics, spec.window_frames, spec.seg_len()});
    const auto acc = corr_as_conv(qraw, qtx, spec);
    const double scale = qraw.scale * qtx.scale;
    std::vector<float> feat(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) feat[i] = static_cast<float>(acc[i] * scale);
    return feat;
}

} // namespace

std::vector<GazeInstance> assemble_compressed_instances(
    const std::vector<std::vector<double>>& mics,
    const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
    const CompressedInstanceSpec& spec, int range_origin, bool quantized, int stride,
    int session_id) {
    cfg.validate();
    spec.validate(cfg);
    if (static_cast<int>(mics.size()) != spec.n_mics)
        throw ContractError("assemble_compressed_instances: mic count mismatch");
    if (stride < 1) throw ContractError("assemble_compressed_instances: stride must be >= 1");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    if (static_cast<int>(labels.size()) < n_frames)
        throw ContractError("assemble_compressed_instances: label trace too short");

    const auto tx = compressed_tx_prefix(cfg, spec);
    const QuantTensor qtx = quantize(tx, {spec.corr_len});
    const int seg_off = segment_offset(cfg, spec, range_origin);

    std::vector<GazeInstance> out;
    if (n_frames < spec.window_frames) return out;
    for (int t = spec.window_frames - 1; t < n_frames; t += stride) {
        const RawWindow w = gather_window(mics, cfg, spec, t, seg_off);
        GazeInstance inst;
        inst.session_id = session_id;
        inst.t_end = t;
        inst.label_x = labels[static_cast<std::size_t>(t)].first;
        inst.label_y = labels[static_cast<std::size_t>(t)].second;
        inst.tensor = quantized ? quantized_features(w, qtx, spec) : float_features(w, tx, spec);
        out.push_back(std::move(inst));
    }
    return out;
}

void save_q8(const std::string& path, const std::vector<std::vector<double>>& mics,
             const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
             const CompressedInstanceSpec& spec, int range_origin, int stride) {
    cfg.validate();
    spec.validate(cfg);
    if (stride < 1) throw ContractError("save_q8: stride must be >= 1");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    if (static_cast<int>(labels.size()) < n_frames) throw ContractError("save_q8: label trace too short");

    const auto tx = compressed_tx_prefix(cfg, spec);
    const QuantTensor qtx = quantize(tx, {spec.corr_len});
    const int seg_off = segment_offset(cfg, spec, range_origin);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write q8 file: " + path);
    const auto put16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    const auto put32 = [&](int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    const auto putf64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };

    out.write("GZQ8", 4);
    put16(1);  // version
    put16(static_cast<uint16_t>(spec.corr_len));
    put16(static_cast<uint16_t>(spec.rows_used));
    put16(static_cast<uint16_t>(spec.window_frames));
    put16(static_cast<uint16_t>(spec.n_mics));
    put32(range_origin);
    putf64(qtx.scale);
    out.write(reinterpret_cast<const char*>(qtx.data.data()),
              static_cast<std::streamsize>(qtx.data.size()));

    uint32_t count = 0;
    for (int t = spec.window_frames - 1; t < n_frames; t += stride) ++count;
    out.write(reinterpret_cast<const char*>(&count), 4);

    for (int t = spec.window_frames - 1; t < n_frames; t += stride) {
        const RawWindow w = gather_window(mics, cfg, spec, t, seg_off);
        const QuantTensor qraw = quantize(w.values, {spec.n_mics, spec.window_frames, spec.seg_len()});
        put32(t);
        putf64(labels[static_cast<std::size_t>(t)].first);
        putf64(labels[static_cast<std::size_t>(t)].second);
        putf64(qraw.scale);
        out.write(reinterpret_cast<const char*>(qraw.data.data()),
                  static_cast<std::streamsize>(qraw.data.size()));
    }
    if (!out) throw IoError("short write on q8 file: " + path);
}

Q8File load_q8(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open q8 file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GZQ8", 4) != 0) throw IoError("bad GZQ8 magic in " + path);
    const auto get16 = [&]() {
        uint16_t v;
        in.read(reinterpret_cast<char*>(&v), 2);
        return v;
    };
    const auto get32 = [&]() {
        int32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    const auto getf64 = [&]() {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (get16() != 1) throw IoError("unsupported GZQ8 version in " + path);

    Q8File f;
    f.spec.corr_len = get16();
    f.spec.rows_used = get16();
    f.spec.window_frames = get16();
    f.spec.n_mics = get16();
    f.range_origin = get32();
    f.tx.scale = getf64();
    f.tx.data.resize(static_cast<std::size_t>(f.spec.corr_len));
    in.read(reinterpret_cast<char*>(f.tx.data.data()), f.spec.corr_len);

    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw IoError("truncated q8 header in " + path);
    const std::size_t tensor_len =
        static_cast<std::size_t>(f.spec.n_mics) * f.spec.window_frames * f.spec.seg_len();
    for (uint32_t i = 0; i < count; ++i) {
        Q8Instance inst;
        inst.t_end = get32();
        inst.label_x = getf64();
        inst.label_y = getf64();
        inst.raw.scale = getf64();
        inst.raw.shape = {f.spec.n_mics, f.spec.window_frames, f.spec.seg_len()};
        inst.raw.data.resize(tensor_len);
        in.read(reinterpret_cast<char*>(inst.raw.data.data()),
                static_cast<std::streamsize>(tensor_len));
        if (!in) throw IoError("truncated q8 record in " + path);
        f.instances.push_back(std::move(inst));
    }
    return f;
}

std::vector<QuantFrameResult> quant_pipeline_predict(
    const std::vector<std::vector<double>>& mics, const FrameConfig& cfg,
    const CompressedInstanceSpec& spec, const ModelArtifact& model, int range_origin) {
    cfg.validate();
    spec.validate(cfg);
    if (static_cast<int>(mics.size()) != spec.n_mics)
        throw ContractError("quant_pipeline_predict: mic count mismatch");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    if (n_frames < spec.window_frames)
        throw ContractError("quant_pipeline_predict: fewer frames than one window");
    const TensorShape want{spec.window_frames, spec.rows_used, spec.n_mics};
    if (model.shape.features() != want.features())
        throw ContractError("quant_pipeline_predict: model trained on a different shape");

    const auto tx = compressed_tx_prefix(cfg, spec);
    const QuantTensor qtx = quantize(tx, {spec.corr_len});
    const int seg_off = segment_offset(cfg, spec, range_origin);

    std::vector<QuantFrameResult> results;
    results.reserve(static_cast<std::size_t>(n_frames - spec.window_frames + 1));
    for (int t = spec.window_frames - 1; t < n_frames; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        const RawWindow w = gather_window(mics, cfg, spec, t, seg_off);
        const std::vector<float> feat = quantized_features(w, qtx, spec);
        const auto pred = model.calib.apply(model.predict_raw(feat.data(), feat.size()));
        const auto t1 = std::chrono::steady_clock::now();
        QuantFrameResult r;
        r.t_end = t;
        r.pred = pred;
        r.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        results.push_back(r);
    }
    return results;
}

} // namespace echogaze
