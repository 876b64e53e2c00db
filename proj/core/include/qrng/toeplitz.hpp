#pragma once

#include "qrng/bitstream.hpp"
#include "qrng/noise_model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qrng {

/// The m + n - 1 bits that define an m x n binary Toeplitz matrix.
///
/// Entry (i, j) is bits[i - j + n - 1], so bits[0] is the top-right corner,
/// bits[n - 1] the main diagonal and bits[m + n - 2] the bottom-left corner.
struct ToeplitzSeed {
    std::size_t m = 0;
    std::size_t n = 0;
    BitStream bits;

    std::size_t length() const noexcept { return m + n - 1; }
    /// Throws std::invalid_argument unless m, n >= 1 and bits.size() == m + n - 1.
    void validate() const;
};

/// Block geometry: n input bits -> m output bits, columns processed in n/k groups of k.
struct ExtractorConfig {
    std::size_t n = 1024;
    std::size_t m = 771;
    std::size_t k = 64;

    double ratio() const noexcept { return static_cast<double>(m) / static_cast<double>(n); }
    /// All >= 1, k divides n, m < n.
    void validate() const;

    /// Geometry whose m/n equals `target_ratio` exactly (as a fraction with denominator
    /// at most 4096). n is the multiple of that denominator closest to `n_hint`; k is the
    /// largest divisor of n not above `k_hint`.
    static ExtractorConfig for_ratio(double target_ratio, std::size_t n_hint = 1024, std::size_t k_hint = 64);
};

/// T[i][j]. Throws std::out_of_range outside the m x n matrix.
bool matrix_entry(const ToeplitzSeed& seed, std::size_t i, std::size_t j);

/// Reference GF(2) product: XORs the seed's column window for every set input bit.
BitStream extract_direct(const ToeplitzSeed& seed, const BitStream& input);

/// Submatrix-decomposed extractor.
///
/// The m x n matrix is cut into n/k column groups. Construction precomputes, for each
/// group, the m row segments of its m x k submatrix packed into 64-bit words; each input
/// block then costs one AND and one XOR per (group, word, row) plus one parity per row.
/// Partial products of the groups are XOR-accumulated before the final parity, which
/// is valid because parity is linear over GF(2).
///
/// extract() is const and thread-safe; one instance serves all workers.
class ToeplitzExtractor {
public:
    /// Requires k | n and seed dimensions matching (m, n). Unlike ExtractorConfig::validate
    /// it does not insist on m < n, so square and tall matrices can be cross-checked.
    ToeplitzExtractor(const ExtractorConfig& config, const ToeplitzSeed& seed);

    const ExtractorConfig& config() const noexcept { return config_; }

    BitStream extract(const BitStream& input) const;

    /// Extracts the n-bit block starting at bit `offset` of `source` and appends the m
    /// output bits to `out`. `scratch` must hold scratch_words() words.
    void extract_at(const BitStream& source, std::size_t offset, BitStream& out,
                    std::span<std::uint64_t> scratch) const;
    std::size_t scratch_words() const noexcept { return slots_.size(); }

private:
    ExtractorConfig config_;
    static constexpr std::size_t tile_rows = 32;
    static constexpr std::size_t lane_vectors = tile_rows / 4;
    struct Slot {
        std::size_t column;
        unsigned width;
    };
    std::vector<Slot> slots_;  // input words per block
    std::size_t tiles_ = 0;
    // Layout [row tile][slot][row in tile]; one tile's accumulators fit in registers.
    std::vector<std::uint64_t> table_;
};

BitStream extract_blocked(const ExtractorConfig& config, const ToeplitzSeed& seed, const BitStream& input);

/// Deterministic pseudo-random seed of m + n - 1 bits.
ToeplitzSeed seed_from_entropy(std::uint64_t prng_seed, std::size_t m, std::size_t n);

/// Concatenates every sample's low `bits_per_sample` bits, LSB first, across blocks in order.
BitStream serialize_samples(std::span<const RawSampleBlock> blocks);
BitStream serialize_samples(std::span<const std::uint16_t> samples, int bits_per_sample);

struct StreamOptions {
    unsigned workers = 1;
    /// Derive a fresh seed for every block from `fresh_seed_base` instead of reusing one.
    bool fresh_seed_per_block = false;
    std::uint64_t fresh_seed_base = 0;
};

/// Extracts every whole n-bit block of an already serialized stream; the partial tail
/// is dropped. Output is identical for any worker count.
BitStream extract_stream(const ExtractorConfig& config, const ToeplitzSeed& seed, const BitStream& raw_bits,
                         const StreamOptions& options = {});

/// serialize_samples followed by extract_stream. Throws on empty input.
BitStream stream_extract(const ExtractorConfig& config, const ToeplitzSeed& seed,
                         std::span<const RawSampleBlock> raw, const StreamOptions& options = {});

}  // namespace qrng
