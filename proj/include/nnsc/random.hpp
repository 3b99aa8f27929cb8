#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nnsc {

/**
 * Seeded generator with bit-exact output across standard libraries.
 *
 * std::mt19937_64 is fully specified by the standard; the distribution
 * helpers below are written out so that results do not depend on the
 * library's <random> distribution implementations.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace nnsc
