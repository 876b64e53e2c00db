#pragma once

#include "qrng/bitstream.hpp"
#include "qrng/noise_model.hpp"
#include "qrng/toeplitz.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace qrng {

// On-disk formats.
//
//   raw samples  <file>       little-endian u16 per sample, low `bits` bits significant
//                <file>.json  {"bits", "count", "full_scale_min", "full_scale_max", "params", "seed", ...}
//   bitstream    <file>       packed bytes, LSB-first
//                <file>.json  {"bit_count", ...}
//   seed         <file>       "QRNGSEED", u32 LE m, u32 LE n, ceil((m+n-1)/8) packed bytes LSB-first

inline constexpr char seed_file_magic[8] = {'Q', 'R', 'N', 'G', 'S', 'E', 'E', 'D'};

std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

/// Provenance recorded next to simulated raw data.
struct RawMetadata {
    std::optional<NoiseModelParams> params;
    std::optional<std::uint64_t> seed;
    std::optional<BandShape> band;
    bool synthetic = true;
};

std::vector<std::uint8_t> encode_raw_samples(std::span<const std::uint16_t> samples);
/// Throws if the byte count is odd or a word has bits set above `bits`.
std::vector<std::uint16_t> decode_raw_samples(std::span<const std::uint8_t> bytes, int bits);

void write_raw_file(const std::filesystem::path& path, const RawSampleBlock& block, const RawMetadata& meta = {});
RawSampleBlock read_raw_file(const std::filesystem::path& path);

void write_bitstream_file(const std::filesystem::path& path, const BitStream& bits,
                          const nlohmann::json& extra = nlohmann::json::object());
BitStream read_bitstream_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_seed(const ToeplitzSeed& seed);
ToeplitzSeed decode_seed(std::span<const std::uint8_t> bytes);
void write_seed_file(const std::filesystem::path& path, const ToeplitzSeed& seed);
ToeplitzSeed read_seed_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace qrng
