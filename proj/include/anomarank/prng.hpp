#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace anomarank {

// SplitMix64. Chosen as the project-wide PRNG because the whole sequence is
// a pure function of the 64-bit seed, with no platform-dependent state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Modulo bias is negligible for n << 2^64.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Marsaglia polar method; caches the spare deviate.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// All randomness in a run flows from one master seed through named
// sub-streams, so each stage is independently reproducible.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    return mix64(master ^ fnv1a64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
    return mix64(derive_seed(master, stream) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace anomarank
