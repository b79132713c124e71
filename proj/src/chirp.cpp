#include "echogaze/chirp.hpp"

#include "echogaze/errors.hpp"

#include <cmath>

namespace echogaze {

std::vector<double> generate_chirp(const ChirpBand& band, const FrameConfig& cfg) {
    cfg.validate();
    if (!(band.f_start_hz < band.f_end_hz))
        throw ConfigError("degenerate chirp band: f_start_hz must be < f_end_hz");
    if (band.f_start_hz <= 0.0 || band.f_end_hz >= cfg.sample_rate_hz / 2.0)
        throw ConfigError("chirp band outside (0, Nyquist)");

    const double fs = cfg.sample_rate_hz;
    const int n = cfg.frame_len;
    const double slope = (band.f_end_hz - band.f_start_hz) / (2.0 * n * fs);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        const double phase = 2.0 * M_PI * (band.f_start_hz * t / fs + slope * t * t);
        out[static_cast<std::size_t>(i)] = std::sin(phase);
    }
    // Raised-cosine edge taper. The sweep resets every frame; without the
    // taper that frequency jump splatters enough energy into the other
    // speaker's band to break spectral disjointness.
    const int taper = std::min(64, n / 8);
    for (int i = 0; i < taper; ++i) {
        const double w = 0.5 * (1.0 - std::cos(M_PI * i / taper));
        out[static_cast<std::size_t>(i)] *= w;
        out[static_cast<std::size_t>(n - 1 - i)] *= w;
    }
    return out;
}

} // namespace echogaze
