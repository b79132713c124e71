#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace echogaze {

using cplx = std::complex<double>;

// Mixed-radix FFT for lengths of the form 2^a * 3^b * 5^c (600 = 2^3*3*5^2).
// Self-contained so the whole pipeline stays dependency-free and bit-stable.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    static bool supported(std::size_t n);

    // Unnormalized forward DFT: X[k] = sum_n x[n] exp(-2*pi*i*n*k/N).
    void forward(const cplx* in, cplx* out) const;

    // Unnormalized inverse: x[n] = sum_k X[k] exp(+2*pi*i*n*k/N); caller scales by 1/N.
    void inverse(const cplx* in, cplx* out) const;

private:
    void transform(const cplx* in, std::size_t stride, cplx* out, std::size_t n,
                   const std::vector<cplx>& w) const;

    std::size_t n_;
    std::vector<cplx> w_fwd_;  // w[k] = exp(-2*pi*i*k/N)
    std::vector<cplx> w_inv_;  // conjugate table
};

} // namespace echogaze
