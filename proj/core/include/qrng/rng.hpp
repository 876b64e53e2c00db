#pragma once

#include <bit>
#include <cstdint>
#include <limits>

namespace qrng {

/// SplitMix64 finalizer. Used to spread user seeds and to derive per-chunk streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent seed for (base, stream, index). Same inputs always give the same seed,
/// so chunk `i` of stream `s` is reproducible no matter which worker simulates it.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) noexcept {
    return mix64(mix64(base ^ mix64(stream)) + index);
}

/// Well-known stream tags for derive_seed.
enum class SeedStream : std::uint64_t {
    raw_chunk = 1,
    held_out = 2,
    toeplitz = 3,
    fresh_toeplitz = 4,
    bench = 5,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index) noexcept {
    return derive_seed(base, static_cast<std::uint64_t>(stream), index);
}

/// xoshiro256++ (Blackman & Vigna), seeded through SplitMix64.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) noexcept { reseed(seed); }

    void reseed(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& s : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            s = z ^ (z >> 31);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_[4]{};
};

/// Standard normal deviates via the Box-Muller transform.
///
/// Written out rather than using std::normal_distribution so that a (seed, count)
/// pair produces the same samples with every standard library.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) noexcept : rng_(seed) {}

    double operator()() noexcept;

private:
    Xoshiro256pp rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qrng
