#include "qrng/formats.hpp"

#include "qrng/report.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace qrng {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    auto p = data_path;
    p += ".json";
    return p;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw std::runtime_error("short read from " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
}

std::vector<std::uint8_t> encode_raw_samples(std::span<const std::uint16_t> samples) {
    std::vector<std::uint8_t> bytes(samples.size() * 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        bytes[2 * i] = static_cast<std::uint8_t>(samples[i] & 0xFF);
        bytes[2 * i + 1] = static_cast<std::uint8_t>(samples[i] >> 8);
    }
    return bytes;
}

std::vector<std::uint16_t> decode_raw_samples(std::span<const std::uint8_t> bytes, int bits) {
    if (bytes.size() % 2 != 0) {
        throw std::invalid_argument("raw sample data has an odd byte count");
    }
    const std::uint32_t limit = (std::uint32_t{1} << bits) - 1;
    std::vector<std::uint16_t> samples(bytes.size() / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
        if (samples[i] > limit) {
            throw std::invalid_argument("raw sample " + std::to_string(i) + " has bits set above bit " +
                                        std::to_string(bits - 1));
        }
    }
    return samples;
}

void write_raw_file(const std::filesystem::path& path, const RawSampleBlock& block, const RawMetadata& meta) {
    block.validate();
    write_file_bytes(path, encode_raw_samples(block.samples));
    json side = block.adc;
    side["count"] = block.count();
    side["format"] = "u16le";
    side["synthetic"] = meta.synthetic;
    if (meta.params) {
        side["params"] = *meta.params;
    }
    if (meta.seed) {
        side["seed"] = *meta.seed;
    }
    if (meta.band) {
        side["band"] = *meta.band;
    }
    write_json_file(sidecar_path(path), side);
}

RawSampleBlock read_raw_file(const std::filesystem::path& path) {
    RawSampleBlock block;
    const auto side_path = sidecar_path(path);
    if (std::filesystem::exists(side_path)) {
        block.adc = read_json_file(side_path).get<AdcConfig>();
    }
    block.adc.validate();
    block.samples = decode_raw_samples(read_file_bytes(path), block.adc.bits);
    if (std::filesystem::exists(side_path)) {
        const auto side = read_json_file(side_path);
        if (side.contains("count") && side["count"].get<std::size_t>() != block.count()) {
            throw std::runtime_error(path.string() + ": sidecar count does not match file length");
        }
    }
    return block;
}

void write_bitstream_file(const std::filesystem::path& path, const BitStream& bits, const json& extra) {
    write_file_bytes(path, bits.to_bytes());
    json side = extra.is_object() ? extra : json::object();
    side["bit_count"] = bits.size();
    side["bit_order"] = "lsb_first";
    write_json_file(sidecar_path(path), side);
}

BitStream read_bitstream_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t bit_count = bytes.size() * 8;
    const auto side_path = sidecar_path(path);
    if (std::filesystem::exists(side_path)) {
        bit_count = read_json_file(side_path).at("bit_count").get<std::size_t>();
    }
    if ((bit_count + 7) / 8 != bytes.size()) {
        throw std::runtime_error(path.string() + ": bit_count " + std::to_string(bit_count) +
                                 " inconsistent with " + std::to_string(bytes.size()) + " bytes");
    }
    return BitStream::from_bytes(bytes, bit_count);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> in) {
    return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
           (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_seed(const ToeplitzSeed& seed) {
    seed.validate();
    std::vector<std::uint8_t> out(std::begin(seed_file_magic), std::end(seed_file_magic));
    put_u32(out, static_cast<std::uint32_t>(seed.m));
    put_u32(out, static_cast<std::uint32_t>(seed.n));
    const auto packed = seed.bits.to_bytes();
    out.insert(out.end(), packed.begin(), packed.end());
    return out;
}

ToeplitzSeed decode_seed(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t header = sizeof(seed_file_magic) + 8;
    if (bytes.size() < header || std::memcmp(bytes.data(), seed_file_magic, sizeof(seed_file_magic)) != 0) {
        throw std::invalid_argument("seed file: bad magic");
    }
    ToeplitzSeed seed;
    seed.m = get_u32(bytes.subspan(8, 4));
    seed.n = get_u32(bytes.subspan(12, 4));
    if (seed.m < 1 || seed.n < 1) {
        throw std::invalid_argument("seed file: m and n must be >= 1");
    }
    const std::size_t bit_count = seed.m + seed.n - 1;
    if (bytes.size() != header + (bit_count + 7) / 8) {
        throw std::invalid_argument("seed file: expected " + std::to_string((bit_count + 7) / 8) +
                                    " payload bytes, got " + std::to_string(bytes.size() - header));
    }
    seed.bits = BitStream::from_bytes(bytes.subspan(header), bit_count);
    return seed;
}

void write_seed_file(const std::filesystem::path& path, const ToeplitzSeed& seed) {
    write_file_bytes(path, encode_seed(seed));
}

ToeplitzSeed read_seed_file(const std::filesystem::path& path) { return decode_seed(read_file_bytes(path)); }

}  // namespace qrng
