#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace snse {

/// xoshiro256++ pseudo-random generator with splitmix64 seeding.
///
/// The whole simulator draws its randomness through this generator so that
/// a (master seed, stream, index) triple reproduces the same path on any
/// platform, independent of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        has_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw in the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    /// Poisson count by accumulating unit-rate exponential arrivals.
    /// Exact for any mean; cost is O(mean).
    std::uint64_t poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw std::invalid_argument("poisson: mean must be finite and nonnegative");
        if (mean > 5e7)
            throw std::invalid_argument("poisson: mean too large for exact sampling");
        std::uint64_t count = 0;
        double clock = 0.0;
        while (true) {
            clock += -std::log(uniform01());
            if (clock > mean) break;
            ++count;
        }
        return count;
    }

    /// Derive an independent seed for (stream, index) under a master seed.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
        std::uint64_t x = master;
        x = splitmix64_at(x + 0x9e3779b97f4a7c15ULL * (stream + 1));
        x = splitmix64_at(x + 0x9e3779b97f4a7c15ULL * (index + 1));
        return x;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix64_at(std::uint64_t x) {
        std::uint64_t s = x;
        return splitmix64(s);
    }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream identifiers used to decorrelate the random inputs of one path.
namespace rng_stream {
inline constexpr std::uint64_t kChain = 1;
inline constexpr std::uint64_t kWiener = 2;
inline constexpr std::uint64_t kJumps = 3;
inline constexpr std::uint64_t kInitial = 4;
inline constexpr std::uint64_t kHypotheses = 5;
} // namespace rng_stream

} // namespace snse
