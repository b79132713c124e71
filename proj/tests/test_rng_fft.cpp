#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echogaze/fft.hpp"
#include "echogaze/rng.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace echogaze;

namespace {

// Independent O(n^2) DFT oracle.
std::vector<cplx> dft_ref(const std::vector<cplx>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = sign * 2.0 * M_PI * static_cast<double>(i * k % n) / static_cast<double>(n);
            acc += x[i] * cplx(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<cplx> random_signal(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    return x;
}

} // namespace

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    CHECK(rng_derive(1, "x") != rng_derive(1, "y"));
    CHECK(rng_derive(1, "x", 0) != rng_derive(1, "x", 1));
    CHECK(rng_derive(1, "x", 7) == rng_derive(1, "x", 7));
}

TEST_CASE("rng uniform bounds and below()") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 10000; ++i) CHECK(rng.below(13) < 13);
    // all residues reachable
    std::vector<int> seen(13, 0);
    for (int i = 0; i < 5000; ++i) seen[static_cast<std::size_t>(rng.below(13))]++;
    for (int c : seen) CHECK(c > 0);
}

TEST_CASE("rng triangular has the configured mean and range") {
    Rng rng(99);
    double acc = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double v = rng.triangular(0.5, 3.5);
        CHECK(v >= 0.5);
        CHECK(v <= 3.5);
        acc += v;
    }
    CHECK(std::fabs(acc / 20000.0 - 2.0) < 0.03);
}

TEST_CASE("fft supported sizes") {
    CHECK(FftPlan::supported(600));
    CHECK(FftPlan::supported(1));
    CHECK(FftPlan::supported(8));
    CHECK(FftPlan::supported(30));
    CHECK_FALSE(FftPlan::supported(7));
    CHECK_FALSE(FftPlan::supported(0));
    CHECK_FALSE(FftPlan::supported(602));
}

TEST_CASE("fft matches the brute-force DFT oracle") {
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 30u, 600u}) {
        const auto x = random_signal(n, 1000 + n);
        const auto want = dft_ref(x, false);
        FftPlan plan(n);
        std::vector<cplx> got(n);
        plan.forward(x.data(), got.data());
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(got[k] - want[k]) < 1e-9 * (1.0 + std::abs(want[k])));

        const auto want_inv = dft_ref(x, true);
        plan.inverse(x.data(), got.data());
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(got[k] - want_inv[k]) < 1e-9 * (1.0 + std::abs(want_inv[k])));
    }
}

TEST_CASE("fft inverse(forward(x))/n recovers x") {
    const std::size_t n = 600;
    const auto x = random_signal(n, 5);
    FftPlan plan(n);
    std::vector<cplx> mid(n), back(n);
    plan.forward(x.data(), mid.data());
    plan.inverse(mid.data(), back.data());
    for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(back[i] / static_cast<double>(n) - x[i]) < 1e-12);
}
