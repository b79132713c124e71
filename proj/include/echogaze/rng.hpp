#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace echogaze {

// Deterministic, platform-independent RNG with splittable streams.
//
// Every random draw in the pipeline descends from one top-level seed via
// rng_derive(seed, stream, index). Streams are cheap to fork and never
// share state, so sessions / trees / instances can be generated in any
// order (or in parallel) with identical results.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_stream_name(std::string_view name) {
    // FNV-1a 64
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t rng_derive(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

inline uint64_t rng_derive(uint64_t seed, std::string_view stream, uint64_t index = 0) {
    return rng_derive(rng_derive(seed, hash_stream_name(stream)), index);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n); n > 0.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller (no cached spare; keeps draws countable).
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Symmetric triangular distribution on [lo, hi], mode at the midpoint.
    double triangular(double lo, double hi) {
        double u = uniform();
        double span = hi - lo;
        if (u < 0.5) return lo + span * std::sqrt(u * 0.5);
        return hi - span * std::sqrt((1.0 - u) * 0.5);
    }

private:
    uint64_t state_;
};

} // namespace echogaze
