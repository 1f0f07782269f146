// Deterministic random number generation for the simulation engine.
//
// Every draw in a run derives from (seed, stream key) through SplitMix64
// key expansion into an xoshiro256** generator, so results are reproducible
// bit-for-bit across platforms and independent of evaluation order between
// streams. Distribution samplers are implemented here (not taken from
// <random>) because libstdc++/libc++ do not guarantee identical sequences.

#pragma once

#include <array>
#include <cstdint>

namespace epsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Combine a seed with stream identifiers into a single 64-bit key.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t k = splitmix64(s);
    s = k ^ a;
    k = splitmix64(s);
    s = k ^ b;
    k = splitmix64(s);
    s = k ^ c;
    return splitmix64(s);
}

// xoshiro256** by Blackman & Vigna (public domain reference implementation).
class Rng {
  public:
    explicit Rng(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson-distributed count with mean `mean`.
    std::uint64_t poisson(double mean);

    /// Standard normal via Box-Muller (one value per call, no caching).
    double gauss();

    /// Pick one category from cumulative weights; returns index, or
    /// `n` if the draw falls past the last cumulative value.
    std::size_t categorical(const double* cumulative, std::size_t n);

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace epsim
