#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace merge {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derives the seed of a named sub-stream from a master seed so that every
// consumer (env sampling, per-agent noise, buffer sampling, ...) gets an
// independent deterministic stream.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream_id) {
    return splitmix64(master ^ splitmix64(stream_id));
}

// mt19937_64 engine with explicit scaling instead of std distributions, so
// sampled values are a pure function of the seed regardless of the standard
// library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Box-Muller; the second deviate is cached.
    double normal(double mean, double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + stddev * r * std::cos(a);
    }

    // Uniform index in [0, n) via 128-bit multiply (no modulo bias).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(eng_()) * n) >> 64);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace merge
