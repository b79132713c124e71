#include "echogaze/fft.hpp"

#include "echogaze/errors.hpp"

#include <cmath>

namespace echogaze {

bool FftPlan::supported(std::size_t n) {
    if (n == 0) return false;
    for (std::size_t r : {2u, 3u, 5u})
        while (n % r == 0) n /= r;
    return n == 1;
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (!supported(n)) throw ConfigError("FFT length must factor into 2, 3 and 5: n=" + std::to_string(n));
    w_fwd_.resize(n);
    w_inv_.resize(n);
    const double step = -2.0 * M_PI / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        double a = step * static_cast<double>(k);
        w_fwd_[k] = cplx(std::cos(a), std::sin(a));
        w_inv_[k] = std::conj(w_fwd_[k]);
    }
}

void FftPlan::transform(const cplx* in, std::size_t stride, cplx* out, std::size_t n,
                        const std::vector<cplx>& w) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t r = (n % 2 == 0) ? 2 : (n % 3 == 0) ? 3 : 5;
    const std::size_t m = n / r;
    for (std::size_t s = 0; s < r; ++s)
        transform(in + s * stride, stride * r, out + s * m, m, w);

    const std::size_t tw = n_ / n;        // twiddle step for omega_n
    const std::size_t rw = n_ / r;        // twiddle step for omega_r
    cplx t[5];
    for (std::size_t k = 0; k < m; ++k) {
        t[0] = out[k];
        for (std::size_t s = 1; s < r; ++s)
            t[s] = out[s * m + k] * w[(s * k * tw) % n_];
        for (std::size_t j = 0; j < r; ++j) {
            cplx acc = t[0];
            for (std::size_t s = 1; s < r; ++s)
                acc += t[s] * w[(s * j * rw) % n_];
            out[k + j * m] = acc;
        }
    }
}

void FftPlan::forward(const cplx* in, cplx* out) const { transform(in, 1, out, n_, w_fwd_); }

void FftPlan::inverse(const cplx* in, cplx* out) const { transform(in, 1, out, n_, w_inv_); }

} // namespace echogaze
