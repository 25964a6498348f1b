#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

namespace sliceprop {

/// splitmix64 finalizer; used to derive independent seeds from (seed, tag)
/// pairs so parallel and serial tree construction agree bit-for-bit.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

/// mt19937_64 with hand-rolled draw helpers. The standard <random>
/// distributions are implementation-defined, so results would not be
/// stable across standard libraries; these helpers are.
class Rng {
public:
    Rng() : eng_(0) {}
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Unbiased integer in [0, n). n must be >= 1.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t reject_below = (0 - bound) % bound;  // 2^64 mod n
        std::uint64_t x;
        do {
            x = eng_();
        } while (x < reject_below);
        return static_cast<std::size_t>(x % bound);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + uniform01() * (hi - lo);
    }

    /// Uniform draw strictly inside (lo, hi). Requires lo < hi.
    double uniform_open(double lo, double hi) {
        for (int i = 0; i < 128; ++i) {
            const double x = uniform(lo, hi);
            if (x > lo && x < hi) return x;
        }
        return std::midpoint(lo, hi);  // interval too narrow to sample
    }

    /// Exponential with the given rate (rate > 0).
    double exponential(double rate) {
        return -std::log1p(-uniform01()) / rate;
    }

    /// Box-Muller normal draw (two uniforms consumed per call).
    double normal(double mean, double sd) {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + sd * z;
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 eng_;
};

}  // namespace sliceprop
