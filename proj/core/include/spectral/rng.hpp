#pragma once

#include <cstdint>
#include <random>

namespace spectral {

/// Seeded generator. Independent streams are derived from (seed, stream)
/// through SplitMix64, so per-trial streams do not depend on execution order.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

    double normal();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    std::uint64_t next_u64() { return engine_(); }
    /// Child stream; advances this generator by one draw.
    Rng split();

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace spectral
