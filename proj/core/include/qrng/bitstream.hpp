#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qrng {

/// Packed bit sequence, LSB-first.
///
/// Bits live in 64-bit words; bit `i` is bit `i % 64` of word `i / 64`. On a
/// little-endian byte view this is the same as LSB-first within each byte, which
/// is the on-disk and on-wire order. Padding bits above `size()` are always zero.
class BitStream {
public:
    BitStream() = default;
    explicit BitStream(std::size_t bit_count);

    static BitStream from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count);
    /// One element per bit, nonzero means 1. Mostly for tests and small fixtures.
    static BitStream from_bools(std::span<const std::uint8_t> bits);

    std::size_t size() const noexcept { return bit_count_; }
    bool empty() const noexcept { return bit_count_ == 0; }
    std::size_t byte_count() const noexcept { return (bit_count_ + 7) / 8; }

    bool get(std::size_t index) const noexcept {
        return (words_[index >> 6] >> (index & 63)) & 1U;
    }
    void set(std::size_t index, bool value) noexcept {
        const std::uint64_t mask = std::uint64_t{1} << (index & 63);
        if (value) {
            words_[index >> 6] |= mask;
        } else {
            words_[index >> 6] &= ~mask;
        }
    }
    void flip(std::size_t index) noexcept { words_[index >> 6] ^= std::uint64_t{1} << (index & 63); }

    /// Reads `count` (<= 64) bits starting at `offset`; bits past the end read as zero.
    std::uint64_t read_bits(std::size_t offset, unsigned count) const noexcept;

    void push_back(bool bit);
    /// Appends the low `count` (<= 64) bits of `value`, least significant first.
    void append_bits(std::uint64_t value, unsigned count);
    void append(const BitStream& other);
    void reserve(std::size_t bit_count) { words_.reserve((bit_count + 63) / 64); }
    void clear() noexcept {
        words_.clear();
        bit_count_ = 0;
    }

    BitStream slice(std::size_t offset, std::size_t count) const;

    std::size_t popcount() const noexcept;
    std::vector<std::uint8_t> to_bytes() const;
    /// 0/1 per element.
    std::vector<std::uint8_t> to_bools() const;

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::span<std::uint64_t> mutable_words() noexcept { return words_; }

    BitStream& operator^=(const BitStream& other);
    friend bool operator==(const BitStream& a, const BitStream& b) noexcept {
        return a.bit_count_ == b.bit_count_ && a.words_ == b.words_;
    }

private:
    void clear_padding() noexcept;

    std::vector<std::uint64_t> words_;
    std::size_t bit_count_ = 0;
};

inline BitStream operator^(BitStream a, const BitStream& b) {
    a ^= b;
    return a;
}

}  // namespace qrng
