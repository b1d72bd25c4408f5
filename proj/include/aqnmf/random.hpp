#pragma once

#include <cstdint>
#include <random>

namespace aqnmf {

/// Seeded generator with a fixed, platform-independent output sequence.
///
/// The engine is std::mt19937_64, whose output is pinned by the standard.
/// Distributions are implemented here rather than taken from <random>
/// because the standard library distributions differ between vendors:
///  - uniform(): top 53 bits of one engine draw scaled by 2^-53, in [0, 1)
///  - normal():  Box-Muller on two uniform() draws, second value cached
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace aqnmf
