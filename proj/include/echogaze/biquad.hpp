#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace echogaze {

struct BandPassSpec {
    double low_cut_hz = 0.0;
    double high_cut_hz = 0.0;
    int order = 4;          // analog prototype order; band-pass doubles it
    int sample_rate_hz = 50000;

    void validate() const;
};

// One second-order section, direct form II transposed.
struct SosSection {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

using SosCoeffs = std::vector<SosSection>;

// Butterworth band-pass via bilinear transform with frequency pre-warping.
// Returns `spec.order` cascaded sections; all poles strictly inside the
// unit circle.
SosCoeffs design_butterworth(const BandPassSpec& spec);

// |H(e^{j*2*pi*f/fs})| of a cascade.
double sos_magnitude(const SosCoeffs& sos, double freq_hz, double sample_rate_hz);

std::string sos_dump(const SosCoeffs& sos);

// Streaming state for one channel. Single owner; reset() between streams.
class BiquadCascade {
public:
    explicit BiquadCascade(SosCoeffs sos);

    void reset();
    double process_sample(double x);
    // Causal forward pass, zero initial state unless the cascade carries
    // state from earlier calls. Output length equals input length.
    void process(const double* in, double* out, std::size_t n);

    const SosCoeffs& coeffs() const { return sos_; }

private:
    SosCoeffs sos_;
    std::vector<double> s1_, s2_;
};

// Convenience one-shot filter: zero initial state, same-length output.
std::vector<double> filter_apply(const SosCoeffs& sos, const std::vector<double>& audio);

} // namespace echogaze
