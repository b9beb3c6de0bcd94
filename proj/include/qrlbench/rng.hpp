#pragma once

#include <cstdint>
#include <random>

namespace qrlbench {

// All stochastic components draw from one of these. The conversions below are
// written out instead of using <random> distributions so that sequences are
// identical across standard library implementations.
class Rng {
public:
    using Engine = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    Engine& engine() { return engine_; }

private:
    Engine engine_;
};

}  // namespace qrlbench
