#include "echogaze/biquad.hpp"

#include "echogaze/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace echogaze {

using cd = std::complex<double>;

void BandPassSpec::validate() const {
    if (order < 1) throw ConfigError("filter order must be >= 1");
    if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
    if (!(0.0 < low_cut_hz && low_cut_hz < high_cut_hz && high_cut_hz < sample_rate_hz / 2.0))
        throw ConfigError("band-pass cutoffs must satisfy 0 < low < high < Nyquist");
}

SosCoeffs design_butterworth(const BandPassSpec& spec) {
    spec.validate();
    const int n = spec.order;
    const double fs = spec.sample_rate_hz;
    const double fs2 = 2.0 * fs;

    // Analog prototype poles on the unit circle, left half plane.
    std::vector<cd> proto;
    proto.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * n) + M_PI / 2.0;
        proto.emplace_back(std::cos(theta), std::sin(theta));
    }

    // Pre-warped band edges, low-pass -> band-pass transform.
    const double w1 = fs2 * std::tan(M_PI * spec.low_cut_hz / fs);
    const double w2 = fs2 * std::tan(M_PI * spec.high_cut_hz / fs);
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;

    std::vector<cd> poles;
    poles.reserve(static_cast<std::size_t>(2 * n));
    for (const cd& p : proto) {
        const cd s = p * (bw / 2.0);
        const cd d = std::sqrt(s * s - w0sq);
        poles.push_back(s + d);
        poles.push_back(s - d);
    }
    // n zeros at s=0 plus n at infinity; gain bw^n.

    // Bilinear transform. Zeros at s=0 map to z=1, the ones at infinity to z=-1.
    cd denom(1.0, 0.0);
    std::vector<cd> zpoles;
    zpoles.reserve(poles.size());
    for (const cd& p : poles) {
        zpoles.push_back((fs2 + p) / (fs2 - p));
        denom *= (fs2 - p);
    }
    cd num = std::pow(cd(fs2, 0.0), n);
    double gain = std::pow(bw, n) * (num / denom).real();
    if (gain < 0.0) gain = -gain;  // sign lives in the pole product round-off

    for (const cd& zp : zpoles)
        if (std::abs(zp) >= 1.0)
            throw ConfigError("designed filter unstable; check cutoffs vs sample rate");

    // Group conjugate pairs into sections, widest-radius pair first.
    std::vector<cd> upper;
    std::vector<double> reals;
    for (const cd& zp : zpoles) {
        if (zp.imag() > 1e-14) upper.push_back(zp);
        else if (zp.imag() >= -1e-14) reals.push_back(zp.real());
    }
    std::sort(upper.begin(), upper.end(), [](const cd& a, const cd& b) { return std::abs(a) > std::abs(b); });
    std::sort(reals.begin(), reals.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });

    SosCoeffs sos;
    const double g = std::pow(gain, 1.0 / n);
    for (const cd& zp : upper) {
        SosSection s;
        s.b0 = g; s.b1 = 0.0; s.b2 = -g;
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        sos.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        SosSection s;
        s.b0 = g; s.b1 = 0.0; s.b2 = -g;
        s.a1 = -(reals[i] + reals[i + 1]);
        s.a2 = reals[i] * reals[i + 1];
        sos.push_back(s);
    }
    if (sos.size() != static_cast<std::size_t>(n))
        throw ConfigError("internal pole pairing failed for band-pass design");
    return sos;
}

double sos_magnitude(const SosCoeffs& sos, double freq_hz, double sample_rate_hz) {
    const double w = 2.0 * M_PI * freq_hz / sample_rate_hz;
    const cd z_inv = std::exp(cd(0.0, -w));
    cd h(1.0, 0.0);
    for (const auto& s : sos) {
        const cd numer = s.b0 + s.b1 * z_inv + s.b2 * z_inv * z_inv;
        const cd denom = 1.0 + s.a1 * z_inv + s.a2 * z_inv * z_inv;
        h *= numer / denom;
    }
    return std::abs(h);
}

std::string sos_dump(const SosCoeffs& sos) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& s : sos)
        os << s.b0 << " " << s.b1 << " " << s.b2 << " " << s.a1 << " " << s.a2 << "\n";
    return os.str();
}

BiquadCascade::BiquadCascade(SosCoeffs sos)
    : sos_(std::move(sos)), s1_(sos_.size(), 0.0), s2_(sos_.size(), 0.0) {}

void BiquadCascade::reset() {
    std::fill(s1_.begin(), s1_.end(), 0.0);
    std::fill(s2_.begin(), s2_.end(), 0.0);
}

double BiquadCascade::process_sample(double x) {
    for (std::size_t i = 0; i < sos_.size(); ++i) {
        const auto& c = sos_[i];
        const double y = c.b0 * x + s1_[i];
        s1_[i] = c.b1 * x - c.a1 * y + s2_[i];
        s2_[i] = c.b2 * x - c.a2 * y;
        x = y;
    }
    return x;
}

void BiquadCascade::process(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = process_sample(in[i]);
}

std::vector<double> filter_apply(const SosCoeffs& sos, const std::vector<double>& audio) {
    if (audio.empty()) throw ContractError("filter_apply: empty input");
    BiquadCascade f(sos);
    std::vector<double> out(audio.size());
    f.process(audio.data(), out.data(), audio.size());
    return out;
}

} // namespace echogaze
