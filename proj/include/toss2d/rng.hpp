#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace toss2d {

/// splitmix64 finalizer; also usable as a standalone mixing step.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and up to three
/// tags (operation id, sweep-point id, trial index). Every Monte Carlo
/// trial gets its own stream keyed this way, so results do not depend on
/// how trials are partitioned across workers.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ULL;
    std::uint64_t h = seed + gamma;
    h = mix64(h + gamma * (a + 1));
    h = mix64(h + gamma * (b + 1));
    h = mix64(h + gamma * (c + 1));
    return h;
}

/// xoshiro256++ generator, state expanded from a 64-bit seed via splitmix64.
/// Small state and cheap construction make one-generator-per-trial viable.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            word = mix64(sm);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
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

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

/// Uniform double in [0, 1), 53-bit resolution. Explicit rather than
/// std::uniform_real_distribution so byte-level reproducibility does not
/// depend on the standard library implementation.
template <typename Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Rng>
double uniform_in(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Exponential draw with the given rate (mean 1/rate); u = 0 maps to 0.
template <typename Rng>
double exponential(Rng& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace toss2d
