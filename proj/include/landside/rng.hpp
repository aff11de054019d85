#pragma once

#include <cstdint>
#include <random>

namespace landside {

/// splitmix64 step; used to derive independent stream seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combines a seed with stream indices (scenario, Monte-Carlo run, ...) into
/// a new seed. Order-sensitive and collision-resistant enough for this use.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b);
}

/// Seeded uniform generator. Wraps mt19937_64 (bit-exact across platforms)
/// and converts to doubles by hand, because std::uniform_real_distribution
/// is implementation-defined and would break cross-compiler reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi). Degenerate lo == hi returns lo exactly.
    double uniform(double lo, double hi) {
        return lo + next_double() * (hi - lo);
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Modulo bias is irrelevant at the sizes used here (index shuffles).
        return engine_() % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace landside
