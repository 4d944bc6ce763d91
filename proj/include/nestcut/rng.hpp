#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nestcut {

// All stochastic code draws from this wrapper instead of <random>
// distributions: distribution implementations vary across standard
// libraries, while mt19937_64 output and the scalings below do not,
// so seeded runs are reproducible across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), n > 0. Rejection-free modulo bias is
    // negligible for the n used here but we reject anyway; it is cheap.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; consumes two draws per pair, caches the second.
    double normal(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return mean + stddev * r * std::cos(a);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stateless per-index hash (splitmix64 over a seed/index mix). Used where
// independent parallel draws are needed, e.g. per-voxel speckle: the value
// at a voxel depends only on (seed, voxel index), never on thread schedule.
inline std::uint64_t hash_u64(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

inline double hash_double(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(hash_u64(seed, index) >> 11) * 0x1.0p-53;
}

}  // namespace nestcut
