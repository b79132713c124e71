#include "echogaze/echo_profile.hpp"

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace echogaze {

int EchoProfile::argmax_row(int col) const {
    int best = 0;
    double best_v = -1.0;
    for (int r = 0; r < rows; ++r) {
        const double v = std::fabs(at(r, col));
        if (v > best_v) {
            best_v = v;
            best = r;
        }
    }
    return best;
}

std::vector<double> cross_correlate_frame_ref(const std::vector<double>& rx,
                                              const std::vector<double>& tx) {
    if (rx.size() != tx.size() || rx.empty())
        throw ContractError("cross_correlate_frame: rx/tx length mismatch");
    const std::size_t n = rx.size();
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i + k;
            if (j >= n) j -= n;
            acc += rx[j] * tx[i];
        }
        c[k] = acc;
    }
    return c;
}

FrameCorrelator::FrameCorrelator(std::vector<double> tx)
    : tx_(std::move(tx)), plan_(FftPlan::supported(tx_.size()) ? tx_.size() : 4) {
    if (tx_.empty()) throw ContractError("FrameCorrelator: empty tx");
    use_fft_ = FftPlan::supported(tx_.size());
    if (use_fft_) {
        const std::size_t n = tx_.size();
        std::vector<cplx> t(n), spec(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = cplx(tx_[i], 0.0);
        plan_.forward(t.data(), spec.data());
        tx_spec_conj_.resize(n);
        for (std::size_t i = 0; i < n; ++i) tx_spec_conj_[i] = std::conj(spec[i]);
        buf_in_.resize(n);
        buf_mid_.resize(n);
        buf_out_.resize(n);
    }
}

void FrameCorrelator::correlate_frame(const double* rx, double* out) const {
    const std::size_t n = tx_.size();
    if (!use_fft_) {
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t j = i + k;
                if (j >= n) j -= n;
                acc += rx[j] * tx_[i];
            }
            out[k] = acc;
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) buf_in_[i] = cplx(rx[i], 0.0);
    plan_.forward(buf_in_.data(), buf_mid_.data());
    for (std::size_t i = 0; i < n; ++i) buf_mid_[i] *= tx_spec_conj_[i];
    plan_.inverse(buf_mid_.data(), buf_out_.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf_out_[i].real() * scale;
}

void FrameCorrelator::correlate_stream(const double* rx, int n_frames, double* out) const {
    const std::size_t n = tx_.size();
    if (!use_fft_) {
        for (int f = 0; f < n_frames; ++f)
            correlate_frame(rx + static_cast<std::size_t>(f) * n, out + static_cast<std::size_t>(f) * n);
        return;
    }
    // Two real frames per complex transform: FFT(a + i*b) * conj(TX) has
    // correlation(a) in its real part and correlation(b) in its imaginary
    // part after the inverse transform, since both correlations are real.
    const double scale = 1.0 / static_cast<double>(n);
    int f = 0;
    for (; f + 1 < n_frames; f += 2) {
        const double* a = rx + static_cast<std::size_t>(f) * n;
        const double* b = a + n;
        for (std::size_t i = 0; i < n; ++i) buf_in_[i] = cplx(a[i], b[i]);
        plan_.forward(buf_in_.data(), buf_mid_.data());
        for (std::size_t i = 0; i < n; ++i) buf_mid_[i] *= tx_spec_conj_[i];
        plan_.inverse(buf_mid_.data(), buf_out_.data());
        double* oa = out + static_cast<std::size_t>(f) * n;
        double* ob = oa + n;
        for (std::size_t i = 0; i < n; ++i) {
            oa[i] = buf_out_[i].real() * scale;
            ob[i] = buf_out_[i].imag() * scale;
        }
    }
    if (f < n_frames)
        correlate_frame(rx + static_cast<std::size_t>(f) * n, out + static_cast<std::size_t>(f) * n);
}

std::vector<double> cross_correlate_frame(const std::vector<double>& rx,
                                          const std::vector<double>& tx) {
    if (rx.size() != tx.size() || rx.empty())
        throw ContractError("cross_correlate_frame: rx/tx length mismatch");
    FrameCorrelator c(tx);
    std::vector<double> out(rx.size());
    c.correlate_frame(rx.data(), out.data());
    return out;
}

namespace {

SosCoeffs band_filter(const ChirpBand& band, const FrameConfig& cfg) {
    BandPassSpec spec;
    spec.low_cut_hz = band.f_start_hz;
    spec.high_cut_hz = band.f_end_hz;
    spec.order = 4;
    spec.sample_rate_hz = cfg.sample_rate_hz;
    return design_butterworth(spec);
}

// Full (uncropped) per-frame correlation of one channel, filtered on demand.
std::vector<double> correlate_channel(const std::vector<double>& rx_stream,
                                      const FrameCorrelator& corr,
                                      const SosCoeffs* filter,
                                      int n_frames) {
    const int n = corr.frame_len();
    const std::size_t len = static_cast<std::size_t>(n_frames) * n;
    std::vector<double> out(len);
    if (filter) {
        std::vector<double> filtered(len);
        BiquadCascade f(*filter);
        f.process(rx_stream.data(), filtered.data(), len);
        corr.correlate_stream(filtered.data(), n_frames, out.data());
    } else {
        corr.correlate_stream(rx_stream.data(), n_frames, out.data());
    }
    return out;
}

// argmax row of mean |corr| across the given frame-major correlation blocks,
// restricted to their first `n_cols` frames.
int argmax_mean_abs(const std::vector<const std::vector<double>*>& blocks, int frame_len, int n_cols) {
    std::vector<double> acc(static_cast<std::size_t>(frame_len), 0.0);
    for (const auto* blk : blocks)
        for (int c = 0; c < n_cols; ++c)
            for (int r = 0; r < frame_len; ++r)
                acc[static_cast<std::size_t>(r)] += std::fabs((*blk)[static_cast<std::size_t>(c) * frame_len + r]);
    return static_cast<int>(std::max_element(acc.begin(), acc.end()) - acc.begin());
}

EchoProfile crop_profile(const std::vector<double>& full, int frame_len, int n_frames,
                         int origin, int rows, bool magnitude, int mic_id, int band_id) {
    EchoProfile p;
    p.rows = rows;
    p.cols = n_frames;
    p.mic_id = mic_id;
    p.band_id = band_id;
    p.range_origin_px = origin;
    p.data.resize(static_cast<std::size_t>(rows) * n_frames);
    for (int c = 0; c < n_frames; ++c)
        for (int r = 0; r < rows; ++r) {
            const int abs_row = (origin + r) % frame_len;
            double v = full[static_cast<std::size_t>(c) * frame_len + abs_row];
            if (magnitude) v = std::fabs(v);
            p.at(r, c) = static_cast<float>(v);
        }
    return p;
}

} // namespace

EchoProfile compute_echo_profile(const std::vector<double>& rx_stream,
                                 const std::vector<double>& tx_frame,
                                 const FrameConfig& cfg,
                                 const ChirpBand& band,
                                 bool filtered,
                                 bool magnitude) {
    cfg.validate();
    if (static_cast<int>(tx_frame.size()) != cfg.frame_len)
        throw ContractError("compute_echo_profile: tx frame length mismatch");
    const int n_frames = static_cast<int>(rx_stream.size()) / cfg.frame_len;
    if (n_frames < 1) throw ContractError("compute_echo_profile: stream shorter than one frame");

    FrameCorrelator corr(tx_frame);
    SosCoeffs coeffs;
    const SosCoeffs* fp = nullptr;
    if (filtered) {
        coeffs = band_filter(band, cfg);
        fp = &coeffs;
    }
    std::vector<double> trimmed(rx_stream.begin(),
                                rx_stream.begin() + static_cast<std::size_t>(n_frames) * cfg.frame_len);
    std::vector<double> full = correlate_channel(trimmed, corr, fp, n_frames);

    const int first_second = std::min(n_frames, std::max(1, cfg.sample_rate_hz / cfg.frame_len));
    const int origin = argmax_mean_abs({&full}, cfg.frame_len, first_second);
    return crop_profile(full, cfg.frame_len, n_frames, origin, cfg.crop_full_px, magnitude, 0, band.speaker_id);
}

ProfileSet compute_profile_set(const std::vector<std::vector<double>>& mics,
                               const FrameConfig& cfg,
                               bool filtered,
                               bool magnitude) {
    cfg.validate();
    if (mics.empty()) throw ContractError("compute_profile_set: no microphone streams");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    if (n_frames < 1) throw ContractError("compute_profile_set: stream shorter than one frame");
    for (const auto& m : mics)
        if (m.size() != mics.front().size())
            throw ContractError("compute_profile_set: microphone streams must have equal length");

    std::vector<std::vector<double>> chirps;
    std::vector<FrameCorrelator> corrs;
    std::vector<SosCoeffs> filters;
    for (const auto& band : cfg.bands) {
        chirps.push_back(generate_chirp(band, cfg));
        corrs.emplace_back(chirps.back());
        filters.push_back(filtered ? band_filter(band, cfg) : SosCoeffs{});
    }

    const std::size_t usable = static_cast<std::size_t>(n_frames) * cfg.frame_len;
    const int n_bands = static_cast<int>(cfg.bands.size());

    // Pass 1: shared origin from the first second of every channel.
    const int first_second = std::min(n_frames, std::max(1, cfg.sample_rate_hz / cfg.frame_len));
    std::vector<std::vector<double>> head_blocks;
    for (const auto& mic : mics) {
        std::vector<double> head(mic.begin(), mic.begin() + static_cast<std::size_t>(first_second) * cfg.frame_len);
        for (int b = 0; b < n_bands; ++b) {
            const SosCoeffs* fp = filtered ? &filters[static_cast<std::size_t>(b)] : nullptr;
            head_blocks.push_back(correlate_channel(head, corrs[static_cast<std::size_t>(b)], fp, first_second));
        }
    }
    std::vector<const std::vector<double>*> refs;
    for (const auto& blk : head_blocks) refs.push_back(&blk);
    const int origin = argmax_mean_abs(refs, cfg.frame_len, first_second);
    head_blocks.clear();

    // Pass 2: full profiles, cropped on the fly.
    ProfileSet set;
    for (std::size_t m = 0; m < mics.size(); ++m) {
        std::vector<double> trimmed(mics[m].begin(), mics[m].begin() + usable);
        for (int b = 0; b < n_bands; ++b) {
            const SosCoeffs* fp = filtered ? &filters[static_cast<std::size_t>(b)] : nullptr;
            std::vector<double> full = correlate_channel(trimmed, corrs[static_cast<std::size_t>(b)], fp, n_frames);
            set.channels.push_back(crop_profile(full, cfg.frame_len, n_frames, origin, cfg.crop_full_px,
                                                magnitude, static_cast<int>(m) + 1, b + 1));
        }
    }
    return set;
}

int detect_range_origin(const std::vector<std::vector<double>>& mics,
                        const FrameConfig& cfg,
                        bool filtered) {
    cfg.validate();
    if (mics.empty()) throw ContractError("detect_range_origin: no microphone streams");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    if (n_frames < 1) throw ContractError("detect_range_origin: stream shorter than one frame");
    const int first_second = std::min(n_frames, std::max(1, cfg.sample_rate_hz / cfg.frame_len));

    std::vector<std::vector<double>> blocks;
    for (const auto& band : cfg.bands) {
        FrameCorrelator corr(generate_chirp(band, cfg));
        SosCoeffs coeffs;
        const SosCoeffs* fp = nullptr;
        if (filtered) {
            coeffs = band_filter(band, cfg);
            fp = &coeffs;
        }
        for (const auto& mic : mics) {
            std::vector<double> head(mic.begin(), mic.begin() + static_cast<std::size_t>(first_second) * cfg.frame_len);
            blocks.push_back(correlate_channel(head, corr, fp, first_second));
        }
    }
    std::vector<const std::vector<double>*> refs;
    for (const auto& blk : blocks) refs.push_back(&blk);
    return argmax_mean_abs(refs, cfg.frame_len, first_second);
}

EchoProfile differential_profile(const EchoProfile& p) {
    if (p.cols < 2) throw ContractError("differential_profile: need at least 2 columns");
    EchoProfile d;
    d.rows = p.rows;
    d.cols = p.cols - 1;
    d.mic_id = p.mic_id;
    d.band_id = p.band_id;
    d.range_origin_px = p.range_origin_px;
    d.data.resize(static_cast<std::size_t>(d.rows) * d.cols);
    for (int r = 0; r < d.rows; ++r)
        for (int c = 0; c < d.cols; ++c)
            d.at(r, c) = p.at(r, c + 1) - p.at(r, c);
    return d;
}

std::vector<GazeInstance> assemble_instances(const ProfileSet& profiles,
                                             const std::vector<std::pair<double, double>>& labels,
                                             const FrameConfig& cfg,
                                             bool augment,
                                             uint64_t rng_seed,
                                             int session_id,
                                             int stride) {
    return assemble_instances_range(profiles, labels, cfg, augment, rng_seed, session_id, stride,
                                    0, profiles.cols());
}

std::vector<GazeInstance> assemble_instances_range(const ProfileSet& profiles,
                                                   const std::vector<std::pair<double, double>>& labels,
                                                   const FrameConfig& cfg,
                                                   bool augment,
                                                   uint64_t rng_seed,
                                                   int session_id,
                                                   int stride,
                                                   int t_begin,
                                                   int t_end) {
    cfg.validate();
    if (profiles.channels.empty()) throw ContractError("assemble_instances: no channels");
    if (stride < 1) throw ContractError("assemble_instances: stride must be >= 1");
    const int n_frames = profiles.cols();
    const int rows = profiles.rows();
    for (const auto& ch : profiles.channels)
        if (ch.cols != n_frames || ch.rows != rows)
            throw ContractError("assemble_instances: channel shape mismatch");
    if (rows != cfg.crop_full_px)
        throw ContractError("assemble_instances: profiles rows != crop_full_px");
    if (static_cast<int>(labels.size()) < n_frames)
        throw ContractError("assemble_instances: label trace shorter than profile");

    const int wf = cfg.window_frames();
    const int used = cfg.crop_used_px;
    const int max_off = cfg.crop_full_px - used;
    const int center_off = max_off / 2;
    const int n_ch = static_cast<int>(profiles.channels.size());

    std::vector<GazeInstance> out;
    if (n_frames < wf) return out;  // below window length: empty, not an error

    int t_first = std::max(wf - 1, t_begin);
    // Snap up to the stride grid anchored at wf-1.
    const int rem = (t_first - (wf - 1)) % stride;
    if (rem != 0) t_first += stride - rem;
    const int t_stop = std::min(n_frames, t_end);

    for (int t = t_first; t < t_stop; t += stride) {
        int off = center_off;
        if (augment && max_off > 0) {
            Rng rng(rng_derive(rng_derive(rng_seed, static_cast<uint64_t>(session_id)),
                               static_cast<uint64_t>(t)));
            off = static_cast<int>(rng.below(static_cast<uint64_t>(max_off + 1)));
        }
        GazeInstance inst;
        inst.session_id = session_id;
        inst.t_end = t;
        inst.label_x = labels[static_cast<std::size_t>(t)].first;
        inst.label_y = labels[static_cast<std::size_t>(t)].second;
        inst.tensor.resize(static_cast<std::size_t>(wf) * used * n_ch);
        float* dst = inst.tensor.data();
        for (int ch = 0; ch < n_ch; ++ch) {
            const EchoProfile& p = profiles.channels[static_cast<std::size_t>(ch)];
            for (int f = 0; f < wf; ++f) {
                const int col = t - (wf - 1) + f;
                for (int r = 0; r < used; ++r)
                    *dst++ = p.at(off + r, col);
            }
        }
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

void put_u16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& s, uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
uint16_t get_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

} // namespace

void save_eprf(const std::string& path, const ProfileSet& profiles) {
    if (profiles.channels.empty()) throw ContractError("save_eprf: empty profile set");
    std::string header = "EPRF";
    put_u16(header, 1);
    put_u32(header, static_cast<uint32_t>(profiles.rows()));
    put_u32(header, static_cast<uint32_t>(profiles.cols()));
    put_u16(header, static_cast<uint16_t>(profiles.channels.size()));
    put_u32(header, static_cast<uint32_t>(profiles.origin()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write profile file: " + path);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& ch : profiles.channels) {
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(ch.data.data()),
                  static_cast<std::streamsize>(ch.data.size() * sizeof(float)));
    }
    if (!out) throw IoError("short write on profile file: " + path);
}

ProfileSet load_eprf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open profile file: " + path);
    unsigned char hdr[20];
    in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (!in || std::memcmp(hdr, "EPRF", 4) != 0) throw IoError("bad EPRF header: " + path);
    const uint16_t version = get_u16(hdr + 4);
    if (version != 1) throw IoError("unsupported EPRF version in " + path);
    const uint32_t rows = get_u32(hdr + 6);
    const uint32_t cols = get_u32(hdr + 10);
    const uint16_t channels = get_u16(hdr + 14);
    const int32_t origin = static_cast<int32_t>(get_u32(hdr + 16));
    if (rows == 0 || cols == 0 || channels == 0) throw IoError("empty EPRF file: " + path);

    ProfileSet set;
    for (int ch = 0; ch < channels; ++ch) {
        EchoProfile p;
        p.rows = static_cast<int>(rows);
        p.cols = static_cast<int>(cols);
        p.mic_id = ch / 2 + 1;
        p.band_id = ch % 2 + 1;
        p.range_origin_px = origin;
        p.data.resize(static_cast<std::size_t>(rows) * cols);
        in.read(reinterpret_cast<char*>(p.data.data()),
                static_cast<std::streamsize>(p.data.size() * sizeof(float)));
        if (!in) throw IoError("truncated EPRF data in " + path);
        set.channels.push_back(std::move(p));
    }
    return set;
}

} // namespace echogaze
