#include "echogaze/simulate.hpp"

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <cmath>

namespace echogaze {

namespace {

constexpr double kRefDb = 94.0;        // RMS 1.0 reads 94 dB
constexpr double kWhiteACorrDb = -2.0; // band-level A-weighting correction for flat noise

double rms(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

} // namespace

double noise_rms_for_level(const NoiseProfile& noise) {
    noise.validate();
    if (noise.target_level_dba <= 0.0) return 0.0;
    const double corr = noise.kind == NoiseProfile::Kind::White ? kWhiteACorrDb : 0.0;
    return std::pow(10.0, (noise.target_level_dba - kRefDb - corr) / 20.0);
}

double measure_level_dba(const std::vector<double>& noise_only, NoiseProfile::Kind kind) {
    if (noise_only.empty()) throw ContractError("measure_level_dba: empty input");
    const double corr = kind == NoiseProfile::Kind::White ? kWhiteACorrDb : 0.0;
    return kRefDb + corr + 20.0 * std::log10(rms(noise_only));
}

std::vector<double> overlay_noise(const std::vector<double>& audio, const NoiseProfile& noise,
                                  uint64_t seed) {
    if (audio.empty()) throw ContractError("overlay_noise: empty audio");
    const double target_rms = noise_rms_for_level(noise);
    if (target_rms == 0.0) return audio;

    std::vector<double> out(audio);
    if (noise.kind == NoiseProfile::Kind::White) {
        Rng rng(rng_derive(seed, "white-noise"));
        for (double& v : out) v += target_rms * rng.normal();
    } else {
        const auto& ref = noise.reference_samples;
        const double ref_rms = rms(ref);
        if (ref_rms <= 0.0) throw ConfigError("recorded noise sample is silent");
        const double scale = target_rms / ref_rms;
        Rng rng(rng_derive(seed, "recorded-noise"));
        const std::size_t offset = rng.below(ref.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += scale * ref[(offset + i) % ref.size()];
    }
    return out;
}

std::vector<std::vector<double>> overlay_noise_multi(const std::vector<std::vector<double>>& audio,
                                                     const NoiseProfile& noise, uint64_t seed) {
    std::vector<std::vector<double>> out;
    out.reserve(audio.size());
    for (std::size_t ch = 0; ch < audio.size(); ++ch)
        out.push_back(overlay_noise(audio[ch], noise, rng_derive(seed, "channel", ch)));
    return out;
}

SynthesizedSession synthesize_session(const SceneSpec& scene,
                                      const std::vector<std::pair<double, double>>& gaze_trace_px,
                                      const FrameConfig& cfg,
                                      uint64_t seed) {
    scene.validate(cfg);
    if (gaze_trace_px.empty()) throw ContractError("synthesize_session: empty gaze trace");

    const int frame_len = cfg.frame_len;
    const double fs = cfg.sample_rate_hz;
    const double c = cfg.speed_of_sound_m_s;
    const int n_frames = static_cast<int>(gaze_trace_px.size());
    const std::size_t n_samples = static_cast<std::size_t>(n_frames) * frame_len;

    std::vector<std::vector<double>> chirps;
    for (std::size_t s = 0; s < scene.speakers.size(); ++s)
        chirps.push_back(generate_chirp(cfg.bands.at(s), cfg));

    Rng jitter_rng(rng_derive(seed, "jitter"));
    const double jitter_samples =
        jitter_rng.uniform(-scene.base_delay_jitter_s, scene.base_delay_jitter_s) * fs;

    SynthesizedSession out;
    out.jitter_samples = jitter_samples;
    out.mics.assign(scene.mics.size(), std::vector<double>(n_samples, 0.0));

    const double half_w = scene.screen.width_px / 2.0;
    const double half_h = scene.screen.height_px / 2.0;

    // One path: add amp * tx circularly shifted by `delay` samples.
    const auto add_path = [&](std::vector<double>& dst, std::size_t frame_base,
                              const std::vector<double>& tx, double delay, double amp) {
        if (delay < 0.0 || delay + 1.0 >= frame_len)
            throw ConfigError("path delay outside one frame");
        const int k = static_cast<int>(delay);
        const double frac = delay - k;
        const double w0 = amp * (1.0 - frac);
        const double w1 = amp * frac;
        for (int n = 0; n < frame_len; ++n) {
            int i0 = n - k;
            if (i0 < 0) i0 += frame_len;
            int i1 = i0 - 1;
            if (i1 < 0) i1 += frame_len;
            dst[frame_base + static_cast<std::size_t>(n)] += w0 * tx[static_cast<std::size_t>(i0)] +
                                                             w1 * tx[static_cast<std::size_t>(i1)];
        }
    };

    double last_gx = 1e300, last_gy = 1e300;
    std::vector<Vec3> refl_pos(scene.reflectors.size());
    for (int f = 0; f < n_frames; ++f) {
        const double gx = (gaze_trace_px[static_cast<std::size_t>(f)].first - half_w) / half_w;
        const double gy = (gaze_trace_px[static_cast<std::size_t>(f)].second - half_h) / half_h;
        if (gx != last_gx || gy != last_gy) {
            for (std::size_t r = 0; r < scene.reflectors.size(); ++r)
                refl_pos[r] = scene.reflectors[r].position(gx, gy);
            last_gx = gx;
            last_gy = gy;
        }
        const std::size_t base = static_cast<std::size_t>(f) * frame_len;
        for (std::size_t m = 0; m < scene.mics.size(); ++m) {
            auto& dst = out.mics[m];
            for (std::size_t s = 0; s < scene.speakers.size(); ++s) {
                const auto& tx = chirps[s];
                // Direct speaker->mic path.
                const double d_direct = distance(scene.speakers[s], scene.mics[m]);
                if (scene.direct_path_gain > 0.0)
                    add_path(dst, base, tx, d_direct / c * fs + jitter_samples,
                             scene.tx_gain * scene.direct_path_gain / (d_direct * d_direct));
                for (std::size_t r = 0; r < scene.reflectors.size(); ++r) {
                    const auto& refl = scene.reflectors[r];
                    const double w = refl.speaker_weights[s < 2 ? s : 1];
                    if (w == 0.0) continue;
                    const double path = distance(scene.speakers[s], refl_pos[r]) +
                                        distance(refl_pos[r], scene.mics[m]);
                    add_path(dst, base, tx, path / c * fs + jitter_samples,
                             scene.tx_gain * refl.amplitude * refl.radius_gain * w / (path * path));
                }
            }
        }
    }

    if (scene.noise.target_level_dba > 0.0)
        out.mics = overlay_noise_multi(out.mics, scene.noise, rng_derive(seed, "scene-noise"));
    return out;
}

} // namespace echogaze
