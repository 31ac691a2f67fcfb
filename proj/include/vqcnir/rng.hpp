#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vqcnir {

/// SplitMix64: a 64-bit counter-based generator. Every stochastic routine
/// takes one of these (or a seed) explicitly; there is no global state.
/// split(k) derives an independent stream from the current seed and k
/// without advancing this stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

    std::uint64_t next_u64()
    {
        return mix(seed_ + (++counter_) * kGamma);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + kGamma))); }

    std::uint64_t seed() const { return seed_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace vqcnir
