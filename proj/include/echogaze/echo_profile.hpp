#pragma once

#include "echogaze/biquad.hpp"
#include "echogaze/fft.hpp"
#include "echogaze/frame_config.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

// Per-channel stack of per-frame cross-correlations. Rows index round-trip
// delay (one sample per row), columns index frames. Values are signed
// correlations; callers wanting the paper-figure rendering take abs().
struct EchoProfile {
    int rows = 0;
    int cols = 0;
    int mic_id = 0;   // 1..8
    int band_id = 0;  // 1..2
    int range_origin_px = 0;  // absolute sample offset of row 0
    std::vector<float> data;  // row-major [r * cols + c]

    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    int argmax_row(int col) const;  // by |value|
};

// All 16 channels of one session, sharing one crop origin.
struct ProfileSet {
    std::vector<EchoProfile> channels;  // index = (mic_id-1)*2 + (band_id-1)
    int rows() const { return channels.empty() ? 0 : channels.front().rows; }
    int cols() const { return channels.empty() ? 0 : channels.front().cols; }
    int origin() const { return channels.empty() ? 0 : channels.front().range_origin_px; }
};

// One model input: a 0.3 s window of cropped echo-profile columns across all
// channels, flattened channel-major (channel, then window frame, then row).
struct GazeInstance {
    std::vector<float> tensor;
    double label_x = 0.0;
    double label_y = 0.0;
    int session_id = 0;
    int t_end = 0;  // index of the newest frame in the window
};

// Brute-force circular cross-correlation, the O(n^2) test oracle:
// c[k] = sum_n rx[(n+k) mod N] * tx[n].
std::vector<double> cross_correlate_frame_ref(const std::vector<double>& rx,
                                              const std::vector<double>& tx);

// Optimized route; FFT-based when the length factors into 2/3/5, brute force
// otherwise. Agrees with the reference to ~1e-12 relative.
std::vector<double> cross_correlate_frame(const std::vector<double>& rx,
                                          const std::vector<double>& tx);

// Reusable frame correlator: caches the tx spectrum and processes two frames
// per complex FFT.
class FrameCorrelator {
public:
    FrameCorrelator(std::vector<double> tx);

    int frame_len() const { return static_cast<int>(tx_.size()); }

    // rx points at n_frames * frame_len samples; writes one correlation row
    // of length frame_len per frame into out (frame-major).
    void correlate_stream(const double* rx, int n_frames, double* out) const;
    void correlate_frame(const double* rx, double* out) const;

private:
    std::vector<double> tx_;
    bool use_fft_ = false;
    FftPlan plan_;
    std::vector<cplx> tx_spec_conj_;
    mutable std::vector<cplx> buf_in_, buf_mid_, buf_out_;
};

// Single-channel operation: band-pass (optional), per-frame circular
// correlation, crop to crop_full_px rows anchored on this channel's own
// direct-path peak (argmax of mean |corr| over the first second).
EchoProfile compute_echo_profile(const std::vector<double>& rx_stream,
                                 const std::vector<double>& tx_frame,
                                 const FrameConfig& cfg,
                                 const ChirpBand& band,
                                 bool filtered,
                                 bool magnitude = false);

// 16-channel pipeline: one shared crop origin across channels (average of
// per-channel first-second profiles). mics are 8 raw streams; each is
// correlated against both band chirps. Channel order (mic-major):
// (m1,b1),(m1,b2),(m2,b1),...
ProfileSet compute_profile_set(const std::vector<std::vector<double>>& mics,
                               const FrameConfig& cfg,
                               bool filtered,
                               bool magnitude = false);

// Shared-origin estimation without cropping; exposed for the quantized path.
int detect_range_origin(const std::vector<std::vector<double>>& mics,
                        const FrameConfig& cfg,
                        bool filtered);

// Frame-to-frame difference: column j of output = column j+1 - column j.
EchoProfile differential_profile(const EchoProfile& p);

// One instance per frame position t in {window_frames-1, ..., n_frames-1}
// stepping by `stride`. With augment set, each instance takes a seeded random
// 60-of-70 row slice; otherwise the center slice. labels[t] is the gaze at
// frame t in screen pixels.
std::vector<GazeInstance> assemble_instances(const ProfileSet& profiles,
                                             const std::vector<std::pair<double, double>>& labels,
                                             const FrameConfig& cfg,
                                             bool augment,
                                             uint64_t rng_seed,
                                             int session_id = 0,
                                             int stride = 1);

// Same stride grid (anchored at window_frames-1) restricted to end frames in
// [t_begin, t_end); used to cut calibration / train / test blocks cheaply.
std::vector<GazeInstance> assemble_instances_range(const ProfileSet& profiles,
                                                   const std::vector<std::pair<double, double>>& labels,
                                                   const FrameConfig& cfg,
                                                   bool augment,
                                                   uint64_t rng_seed,
                                                   int session_id,
                                                   int stride,
                                                   int t_begin,
                                                   int t_end);

void save_eprf(const std::string& path, const ProfileSet& profiles);
ProfileSet load_eprf(const std::string& path);

} // namespace echogaze
