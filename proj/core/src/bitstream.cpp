#include "qrng/bitstream.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace qrng {

namespace {

constexpr std::uint64_t low_mask(unsigned count) noexcept {
    return count >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << count) - 1;
}

}  // namespace

BitStream::BitStream(std::size_t bit_count) : words_((bit_count + 63) / 64, 0), bit_count_(bit_count) {}

BitStream BitStream::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    if (bytes.size() * 8 < bit_count) {
        throw std::invalid_argument("BitStream::from_bytes: not enough bytes for bit_count");
    }
    BitStream out(bit_count);
    const std::size_t used = (bit_count + 7) / 8;
    for (std::size_t i = 0; i < used; ++i) {
        out.words_[i >> 3] |= std::uint64_t{bytes[i]} << (8 * (i & 7));
    }
    out.clear_padding();
    return out;
}

BitStream BitStream::from_bools(std::span<const std::uint8_t> bits) {
    BitStream out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 0) {
            out.set(i, true);
        }
    }
    return out;
}

std::uint64_t BitStream::read_bits(std::size_t offset, unsigned count) const noexcept {
    if (count == 0 || offset >= bit_count_) {
        return 0;
    }
    const std::size_t word = offset >> 6;
    const unsigned shift = offset & 63;
    std::uint64_t value = words_[word] >> shift;
    if (shift != 0 && shift + count > 64 && word + 1 < words_.size()) {
        value |= words_[word + 1] << (64 - shift);
    }
    return value & low_mask(count);
}

void BitStream::push_back(bool bit) {
    if ((bit_count_ & 63) == 0) {
        words_.push_back(0);
    }
    if (bit) {
        words_[bit_count_ >> 6] |= std::uint64_t{1} << (bit_count_ & 63);
    }
    ++bit_count_;
}

void BitStream::append_bits(std::uint64_t value, unsigned count) {
    if (count == 0) {
        return;
    }
    value &= low_mask(count);
    const unsigned shift = bit_count_ & 63;
    if (shift == 0) {
        words_.push_back(value);
    } else {
        words_.back() |= value << shift;
        if (shift + count > 64) {
            words_.push_back(value >> (64 - shift));
        }
    }
    bit_count_ += count;
}

void BitStream::append(const BitStream& other) {
    if (other.empty()) {
        return;
    }
    if ((bit_count_ & 63) == 0) {
        words_.insert(words_.end(), other.words_.begin(), other.words_.end());
        bit_count_ += other.bit_count_;
        return;
    }
    reserve(bit_count_ + other.bit_count_);
    std::size_t remaining = other.bit_count_;
    for (std::uint64_t w : other.words_) {
        const unsigned take = remaining >= 64 ? 64U : static_cast<unsigned>(remaining);
        append_bits(w, take);
        remaining -= take;
    }
}

BitStream BitStream::slice(std::size_t offset, std::size_t count) const {
    if (offset > bit_count_ || count > bit_count_ - offset) {
        throw std::out_of_range("BitStream::slice: range exceeds stream");
    }
    BitStream out(count);
    for (std::size_t w = 0; w < out.words_.size(); ++w) {
        const std::size_t left = count - 64 * w;
        out.words_[w] = read_bits(offset + 64 * w, left >= 64 ? 64U : static_cast<unsigned>(left));
    }
    return out;
}

std::size_t BitStream::popcount() const noexcept {
    std::size_t total = 0;
    for (std::uint64_t w : words_) {
        total += static_cast<std::size_t>(std::popcount(w));
    }
    return total;
}

std::vector<std::uint8_t> BitStream::to_bytes() const {
    std::vector<std::uint8_t> out(byte_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(words_[i >> 3] >> (8 * (i & 7)));
    }
    return out;
}

std::vector<std::uint8_t> BitStream::to_bools() const {
    std::vector<std::uint8_t> out(bit_count_);
    for (std::size_t i = 0; i < bit_count_; ++i) {
        out[i] = get(i) ? 1 : 0;
    }
    return out;
}

BitStream& BitStream::operator^=(const BitStream& other) {
    if (other.bit_count_ != bit_count_) {
        throw std::invalid_argument("BitStream xor: length mismatch");
    }
    std::transform(words_.begin(), words_.end(), other.words_.begin(), words_.begin(),
                   [](std::uint64_t a, std::uint64_t b) { return a ^ b; });
    return *this;
}

void BitStream::clear_padding() noexcept {
    const unsigned tail = bit_count_ & 63;
    if (tail != 0 && !words_.empty()) {
        words_.back() &= low_mask(tail);
    }
}

}  // namespace qrng
