#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace elssa {

/// Counter-based pseudorandom source. Draw i of stream `seed` is
/// splitmix64(seed + (i+1) * 0x9E3779B97F4A7C15), so any draw can be computed
/// independently of the others and streams are reproducible across languages
/// from the seed alone (see README for the exact recipe).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed), counter_(0) {}

    /// Derive an independent stream, e.g. one per noise channel.
    CounterRng substream(std::uint64_t tag) const {
        return CounterRng(mix(seed_ ^ (0xA5A5A5A5DEADBEEFull + tag * 0xD1342543DE82EF95ull)));
    }

    std::uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (cosine branch); consumes two uniforms.
    double gaussian() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace elssa
