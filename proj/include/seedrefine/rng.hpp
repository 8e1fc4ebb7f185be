#pragma once

#include <cmath>
#include <cstdint>

namespace seedrefine {

/// Small deterministic generator (splitmix64). Used instead of <random> engines so
/// seeded runs reproduce bit-for-bit across standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be positive. The modulo bias is below
    /// n / 2^64 and irrelevant at the batch sizes used here.
    uint64_t next_below(uint64_t n) { return next() % n; }

    /// Standard normal via Box-Muller.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double(), u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Derive an independent stream (e.g. one per epoch or per item).
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
        return g.next();
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace seedrefine
