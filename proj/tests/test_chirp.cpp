#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"
#include "echogaze/frame_config.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace echogaze;

namespace {

// Independent DFT magnitude-squared oracle (O(n^2), test-only).
std::vector<double> power_spectrum_ref(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = -2.0 * M_PI * static_cast<double>(i * k % n) / static_cast<double>(n);
            re += x[i] * std::cos(a);
            im += x[i] * std::sin(a);
        }
        p[k] = re * re + im * im;
    }
    return p;
}

// Mean frequency from zero-crossing spacing over samples [begin, begin+len).
double zero_crossing_freq(const std::vector<double>& x, std::size_t begin, std::size_t len, double fs) {
    std::vector<double> crossings;
    for (std::size_t i = begin + 1; i < begin + len; ++i) {
        if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] > 0.0 && x[i] <= 0.0)) {
            const double frac = x[i - 1] / (x[i - 1] - x[i]);
            crossings.push_back(static_cast<double>(i - 1) + frac);
        }
    }
    REQUIRE(crossings.size() >= 3);
    const double span = crossings.back() - crossings.front();
    const double half_periods = static_cast<double>(crossings.size() - 1);
    return fs * half_periods / (2.0 * span);
}

double band_energy(const std::vector<double>& p, double f_lo, double f_hi, double fs, int guard_bins) {
    const std::size_t n = p.size();
    const double bin_hz = fs / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = k * bin_hz;
        if (f >= f_lo - guard_bins * bin_hz && f <= f_hi + guard_bins * bin_hz) acc += p[k];
    }
    return acc;
}

double total_energy(const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= p.size() / 2; ++k) acc += p[k];
    return acc;
}

} // namespace

TEST_CASE("chirp basics: length, amplitude, determinism") {
    FrameConfig cfg;
    const auto c = generate_chirp(cfg.bands[0], cfg);
    CHECK(c.size() == 600);
    for (double v : c) CHECK(std::fabs(v) <= 1.0);
    const auto c2 = generate_chirp(cfg.bands[0], cfg);
    CHECK(c == c2);
}

TEST_CASE("chirp instantaneous frequency endpoints via zero crossings") {
    FrameConfig cfg;
    const auto c = generate_chirp(cfg.bands[0], cfg);
    const double f0 = zero_crossing_freq(c, 0, 50, cfg.sample_rate_hz);
    const double f1 = zero_crossing_freq(c, c.size() - 50, 50, cfg.sample_rate_hz);
    CHECK(f0 == doctest::Approx(18000.0).epsilon(0.05));
    CHECK(f1 == doctest::Approx(21000.0).epsilon(0.05));
}

TEST_CASE("chirp band energy concentration (DFT oracle)") {
    FrameConfig cfg;
    for (const auto& band : cfg.bands) {
        const auto c = generate_chirp(band, cfg);
        const auto p = power_spectrum_ref(c);
        const double in_band = band_energy(p, band.f_start_hz, band.f_end_hz, cfg.sample_rate_hz, 1);
        CHECK(in_band / total_energy(p) >= 0.95);
    }
}

TEST_CASE("cross-band leakage below -30 dB") {
    FrameConfig cfg;
    const auto c1 = generate_chirp(cfg.bands[0], cfg);
    const auto p1 = power_spectrum_ref(c1);
    const double in_own = band_energy(p1, cfg.bands[0].f_start_hz, cfg.bands[0].f_end_hz,
                                      cfg.sample_rate_hz, 1);
    const double in_other = band_energy(p1, cfg.bands[1].f_start_hz, cfg.bands[1].f_end_hz,
                                        cfg.sample_rate_hz, 0);
    CHECK(10.0 * std::log10(in_other / in_own) < -30.0);

    const auto c2 = generate_chirp(cfg.bands[1], cfg);
    const auto p2 = power_spectrum_ref(c2);
    const double own2 = band_energy(p2, cfg.bands[1].f_start_hz, cfg.bands[1].f_end_hz,
                                    cfg.sample_rate_hz, 1);
    const double other2 = band_energy(p2, cfg.bands[0].f_start_hz, cfg.bands[0].f_end_hz,
                                      cfg.sample_rate_hz, 0);
    CHECK(10.0 * std::log10(other2 / own2) < -30.0);
}

TEST_CASE("degenerate and out-of-range bands are rejected") {
    FrameConfig cfg;
    CHECK_THROWS_AS(generate_chirp(ChirpBand{21000.0, 21000.0, 1}, cfg), ConfigError);
    CHECK_THROWS_AS(generate_chirp(ChirpBand{21000.0, 18000.0, 1}, cfg), ConfigError);
    CHECK_THROWS_AS(generate_chirp(ChirpBand{24000.0, 26000.0, 1}, cfg), ConfigError);
}

TEST_CASE("refresh rate") {
    FrameConfig cfg;
    CHECK(refresh_rate(cfg) == doctest::Approx(83.3333333333).epsilon(1e-9));

    FrameConfig one_hz = cfg;
    one_hz.frame_len = 50000;
    one_hz.crop_full_px = 70;
    CHECK(refresh_rate(one_hz) == 1.0);

    FrameConfig f48 = cfg;
    f48.sample_rate_hz = 48000;
    f48.bands = {{18000.0, 21000.0, 1}};  // default band 2 would cross the new Nyquist
    CHECK(refresh_rate(f48) == 80.0);
}

TEST_CASE("frame config invariants and JSON round trip") {
    FrameConfig cfg;
    CHECK(cfg.window_frames() == 26);
    CHECK(cfg.row_spacing_m() == doctest::Approx(0.0034).epsilon(1e-12));

    const FrameConfig back = FrameConfig::from_json(cfg.to_json());
    CHECK(back.sample_rate_hz == cfg.sample_rate_hz);
    CHECK(back.frame_len == cfg.frame_len);
    CHECK(back.bands.size() == cfg.bands.size());
    CHECK(config_hash(back) == config_hash(cfg));

    FrameConfig bad = cfg;
    bad.crop_used_px = 80;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    FrameConfig overlap = cfg;
    overlap.bands[1].f_start_hz = 20000.0;  // overlaps band 1
    CHECK_THROWS_AS(overlap.validate(), ConfigError);

    FrameConfig above_nyquist = cfg;
    above_nyquist.bands[1].f_end_hz = 25000.0;
    CHECK_THROWS_AS(above_nyquist.validate(), ConfigError);
}
