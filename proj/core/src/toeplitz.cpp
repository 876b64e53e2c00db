#include "qrng/toeplitz.hpp"

#include "qrng/rng.hpp"

#include <algorithm>
#include <cstring>
#include <bit>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

namespace qrng {

namespace {
// Four 64-bit lanes; GCC and Clang lower this to one AVX2 register or two SSE ones.
using Lanes = std::uint64_t __attribute__((vector_size(32)));
constexpr std::size_t lane_width = 4;

// Within a 32-row tile, row 8 * l + r lives in lane l of vector bitrev3(r). That is the
// order in which parity_bits() below emits the bits.
constexpr std::size_t tile_slot(std::size_t row_in_tile) {
    const std::size_t r = row_in_tile & 7;
    const std::size_t rev = ((r & 1) << 2) | (r & 2) | ((r >> 2) & 1);
    return rev * lane_width + row_in_tile / 8;
}

// Parity of all 32 accumulator words, packed by row. Halves are folded and merged so
// that each step works on whole vectors.
std::uint32_t parity_bits(const Lanes (&acc)[8]) {
    constexpr std::uint64_t m32 = 0x00000000FFFFFFFFULL;
    constexpr std::uint64_t m16 = 0x0000FFFF0000FFFFULL;
    constexpr std::uint64_t m8 = 0x00FF00FF00FF00FFULL;
    Lanes b[4];
    for (int j = 0; j < 4; ++j) {
        const Lanes lo = acc[2 * j] ^ (acc[2 * j] >> 32);
        const Lanes hi = acc[2 * j + 1] ^ (acc[2 * j + 1] >> 32);
        b[j] = (lo & m32) | (hi << 32);
    }
    Lanes c[2];
    for (int i = 0; i < 2; ++i) {
        const Lanes lo = b[2 * i] ^ (b[2 * i] >> 16);
        const Lanes hi = b[2 * i + 1] ^ (b[2 * i + 1] >> 16);
        c[i] = (lo & m16) | ((hi & m16) << 16);
    }
    Lanes d = (c[0] ^ (c[0] >> 8)) & m8;
    d |= ((c[1] ^ (c[1] >> 8)) & m8) << 8;
    d ^= d >> 4;
    d ^= d >> 2;
    d ^= d >> 1;
    d &= 0x0101010101010101ULL;
    std::uint32_t out = 0;
    for (std::size_t l = 0; l < lane_width; ++l) {
        // Gathers bit 0 of every byte into the top byte.
        out |= static_cast<std::uint32_t>((d[l] * 0x0102040810204080ULL) >> 56) << (8 * l);
    }
    return out;
}
}  // namespace

void ToeplitzSeed::validate() const {
    if (m < 1 || n < 1) {
        throw std::invalid_argument("ToeplitzSeed: m and n must be >= 1");
    }
    if (bits.size() != m + n - 1) {
        throw std::invalid_argument("ToeplitzSeed: expected " + std::to_string(m + n - 1) + " bits, got " +
                                    std::to_string(bits.size()));
    }
}

void ExtractorConfig::validate() const {
    if (n < 1 || m < 1 || k < 1) {
        throw std::invalid_argument("ExtractorConfig: n, m and k must all be >= 1");
    }
    if (n % k != 0) {
        throw std::invalid_argument("ExtractorConfig: k = " + std::to_string(k) + " does not divide n = " +
                                    std::to_string(n));
    }
    if (m >= n) {
        throw std::invalid_argument("ExtractorConfig: m must be smaller than n");
    }
}

ExtractorConfig ExtractorConfig::for_ratio(double target_ratio, std::size_t n_hint, std::size_t k_hint) {
    if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
        throw std::invalid_argument("ExtractorConfig::for_ratio: ratio must be in (0, 1)");
    }
    constexpr std::uint64_t max_denominator = 4096;

    // Best rational approximation via continued-fraction convergents.
    std::uint64_t p_prev = 0, q_prev = 1, p = 1, q = 0;
    double x = target_ratio;
    std::uint64_t best_p = 0, best_q = 1;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_real = std::floor(x);
        const auto a = static_cast<std::uint64_t>(a_real);
        const std::uint64_t p_next = a * p + p_prev;
        const std::uint64_t q_next = a * q + q_prev;
        if (q_next > max_denominator) {
            break;
        }
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        best_p = p;
        best_q = q;
        const double frac = x - a_real;
        if (std::abs(static_cast<double>(p) / static_cast<double>(q) - target_ratio) < 1e-12 || frac < 1e-12) {
            break;
        }
        x = 1.0 / frac;
    }
    if (best_p == 0) {
        best_p = 1;
        best_q = max_denominator;
    }

    const std::size_t multiple = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n_hint) / static_cast<double>(best_q))));
    ExtractorConfig cfg;
    cfg.n = best_q * multiple;
    cfg.m = best_p * multiple;
    cfg.k = 1;
    for (std::size_t d = std::min(k_hint, cfg.n); d >= 1; --d) {
        if (cfg.n % d == 0) {
            cfg.k = d;
            break;
        }
    }
    cfg.validate();
    return cfg;
}

bool matrix_entry(const ToeplitzSeed& seed, std::size_t i, std::size_t j) {
    if (i >= seed.m || j >= seed.n) {
        throw std::out_of_range("matrix_entry: (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") outside " + std::to_string(seed.m) + " x " + std::to_string(seed.n));
    }
    return seed.bits.get(i + seed.n - 1 - j);
}

BitStream extract_direct(const ToeplitzSeed& seed, const BitStream& input) {
    seed.validate();
    if (input.size() != seed.n) {
        throw std::invalid_argument("extract_direct: input has " + std::to_string(input.size()) +
                                    " bits, expected n = " + std::to_string(seed.n));
    }
    BitStream out(seed.m);
    auto acc = out.mutable_words();
    // Column j of T is the contiguous seed window starting at n - 1 - j.
    for (std::size_t j = 0; j < seed.n; ++j) {
        if (!input.get(j)) {
            continue;
        }
        const std::size_t start = seed.n - 1 - j;
        for (std::size_t w = 0; w < acc.size(); ++w) {
            const std::size_t left = seed.m - 64 * w;
            acc[w] ^= seed.bits.read_bits(start + 64 * w, left >= 64 ? 64U : static_cast<unsigned>(left));
        }
    }
    return out;
}

ToeplitzExtractor::ToeplitzExtractor(const ExtractorConfig& config, const ToeplitzSeed& seed) : config_(config) {
    seed.validate();
    if (config.n < 1 || config.m < 1 || config.k < 1 || config.n % config.k != 0) {
        throw std::invalid_argument("ToeplitzExtractor: need n, m, k >= 1 with k dividing n");
    }
    if (seed.m != config.m || seed.n != config.n) {
        throw std::invalid_argument("ToeplitzExtractor: seed is " + std::to_string(seed.m) + " x " +
                                    std::to_string(seed.n) + " but config is " + std::to_string(config.m) +
                                    " x " + std::to_string(config.n));
    }

    // With the seed reversed, row i is the contiguous window starting at m - 1 - i.
    const std::size_t len = seed.length();
    BitStream reversed(len);
    for (std::size_t t = 0; t < len; ++t) {
        if (seed.bits.get(len - 1 - t)) {
            reversed.set(t, true);
        }
    }

    const std::size_t m = config.m;
    const std::size_t groups = config.n / config.k;
    // Input words ("slots"): a group wider than 64 columns spans several words, and
    // narrower groups are packed whole, floor(64 / k) to a word.
    if (config.k >= 64) {
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t c = 0; c < config.k; c += 64) {
                slots_.push_back({g * config.k + c, static_cast<unsigned>(std::min<std::size_t>(64, config.k - c))});
            }
        }
    } else {
        const std::size_t per_word = 64 / config.k;
        for (std::size_t g = 0; g < groups; g += per_word) {
            slots_.push_back({g * config.k, static_cast<unsigned>(std::min(per_word, groups - g) * config.k)});
        }
    }
    tiles_ = (m + tile_rows - 1) / tile_rows;
    const std::size_t slots = slots_.size();
    table_.assign(tiles_ * slots * tile_rows, 0);
    for (std::size_t slot = 0; slot < slots; ++slot) {
        const auto [col, width] = slots_[slot];
        for (std::size_t i = 0; i < m; ++i) {
            table_[((i / tile_rows) * slots + slot) * tile_rows + tile_slot(i % tile_rows)] =
                reversed.read_bits(m - 1 - i + col, width);
        }
    }
}

void ToeplitzExtractor::extract_at(const BitStream& source, std::size_t offset, BitStream& out,
                                   std::span<std::uint64_t> scratch) const {
    const std::size_t slots = slots_.size();
    std::uint64_t* xs = scratch.data();
    for (std::size_t s = 0; s < slots; ++s) {
        xs[s] = source.read_bits(offset + slots_[s].column, slots_[s].width);
    }

    // Output bit i = parity(sum over slots of row_i & x); parity is linear, so the
    // per-slot ANDs can be XOR-accumulated and counted once.
    std::size_t remaining = config_.m;
    for (std::size_t t = 0; t < tiles_; ++t) {
        Lanes acc[lane_vectors] = {};
        const std::uint64_t* rows = &table_[t * slots * tile_rows];
        for (std::size_t s = 0; s < slots; ++s, rows += tile_rows) {
            const Lanes x = Lanes{} + xs[s];
#pragma GCC unroll 8
            for (std::size_t v = 0; v < lane_vectors; ++v) {
                Lanes r;
                std::memcpy(&r, rows + v * lane_width, sizeof(r));
                acc[v] ^= r & x;
            }
        }
        const std::uint32_t packed = parity_bits(acc);
        const auto count = static_cast<unsigned>(std::min<std::size_t>(tile_rows, remaining));
        out.append_bits(packed, count);
        remaining -= count;
    }
}

BitStream ToeplitzExtractor::extract(const BitStream& input) const {
    if (input.size() != config_.n) {
        throw std::invalid_argument("ToeplitzExtractor::extract: input has " + std::to_string(input.size()) +
                                    " bits, expected n = " + std::to_string(config_.n));
    }
    BitStream out;
    out.reserve(config_.m);
    std::vector<std::uint64_t> scratch(scratch_words());
    extract_at(input, 0, out, scratch);
    return out;
}

BitStream extract_blocked(const ExtractorConfig& config, const ToeplitzSeed& seed, const BitStream& input) {
    if (config.k < 1 || config.n % config.k != 0) {
        throw std::invalid_argument("extract_blocked: k = " + std::to_string(config.k) + " does not divide n = " +
                                    std::to_string(config.n));
    }
    if (input.size() != config.n) {
        throw std::invalid_argument("extract_blocked: input has " + std::to_string(input.size()) +
                                    " bits, expected n = " + std::to_string(config.n));
    }
    return ToeplitzExtractor(config, seed).extract(input);
}

ToeplitzSeed seed_from_entropy(std::uint64_t prng_seed, std::size_t m, std::size_t n) {
    if (m < 1 || n < 1) {
        throw std::invalid_argument("seed_from_entropy: m and n must be >= 1");
    }
    ToeplitzSeed seed{m, n, BitStream(m + n - 1)};
    Xoshiro256pp rng(derive_seed(prng_seed, SeedStream::toeplitz, 0));
    std::size_t remaining = seed.length();
    BitStream bits;
    bits.reserve(remaining);
    while (remaining > 0) {
        const auto take = static_cast<unsigned>(std::min<std::size_t>(64, remaining));
        bits.append_bits(rng(), take);
        remaining -= take;
    }
    seed.bits = std::move(bits);
    return seed;
}

BitStream serialize_samples(std::span<const std::uint16_t> samples, int bits_per_sample) {
    if (bits_per_sample < 1 || bits_per_sample > 16) {
        throw std::invalid_argument("serialize_samples: bits_per_sample must be in [1, 16]");
    }
    BitStream out;
    out.reserve(samples.size() * static_cast<std::size_t>(bits_per_sample));
    for (std::uint16_t s : samples) {
        out.append_bits(s, static_cast<unsigned>(bits_per_sample));
    }
    return out;
}

BitStream serialize_samples(std::span<const RawSampleBlock> blocks) {
    BitStream out;
    std::size_t total = 0;
    for (const auto& b : blocks) {
        total += b.count() * static_cast<std::size_t>(b.adc.bits);
    }
    out.reserve(total);
    for (const auto& b : blocks) {
        for (std::uint16_t s : b.samples) {
            out.append_bits(s, static_cast<unsigned>(b.adc.bits));
        }
    }
    return out;
}

namespace {

BitStream extract_range(const ExtractorConfig& config, const ToeplitzSeed& seed, const BitStream& raw,
                        std::size_t first_block, std::size_t last_block, const StreamOptions& options) {
    BitStream out;
    out.reserve((last_block - first_block) * config.m);
    std::vector<std::uint64_t> scratch(config.n);
    if (!options.fresh_seed_per_block) {
        const ToeplitzExtractor extractor(config, seed);
        for (std::size_t b = first_block; b < last_block; ++b) {
            extractor.extract_at(raw, b * config.n, out, scratch);
        }
        return out;
    }
    for (std::size_t b = first_block; b < last_block; ++b) {
        const auto block_seed =
            seed_from_entropy(derive_seed(options.fresh_seed_base, SeedStream::fresh_toeplitz, b), config.m, config.n);
        ToeplitzExtractor(config, block_seed).extract_at(raw, b * config.n, out, scratch);
    }
    return out;
}

}  // namespace

BitStream extract_stream(const ExtractorConfig& config, const ToeplitzSeed& seed, const BitStream& raw_bits,
                         const StreamOptions& options) {
    config.validate();
    seed.validate();
    const std::size_t blocks = raw_bits.size() / config.n;
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(blocks, 1));
    if (workers == 1) {
        return extract_range(config, seed, raw_bits, 0, blocks, options);
    }

    std::vector<BitStream> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = blocks * w / workers;
            const std::size_t last = blocks * (w + 1) / workers;
            threads.emplace_back([&, w, first, last] {
                try {
                    parts[w] = extract_range(config, seed, raw_bits, first, last, options);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    BitStream out;
    out.reserve(blocks * config.m);
    for (const auto& p : parts) {
        out.append(p);
    }
    return out;
}

BitStream stream_extract(const ExtractorConfig& config, const ToeplitzSeed& seed,
                         std::span<const RawSampleBlock> raw, const StreamOptions& options) {
    std::size_t samples = 0;
    for (const auto& b : raw) {
        samples += b.count();
    }
    if (samples == 0) {
        throw std::invalid_argument("stream_extract: no raw samples");
    }
    return extract_stream(config, seed, serialize_samples(raw), options);
}

}  // namespace qrng
