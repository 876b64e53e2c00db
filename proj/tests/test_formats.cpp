#include "qrng/formats.hpp"
#include "qrng/noise_model.hpp"
#include "qrng/toeplitz.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include <unistd.h>

using namespace qrng;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("qrng_formats_" + name + "_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(RawFormat, LittleEndianU16) {
    const std::vector<std::uint16_t> samples{0x0001, 0x03FF, 0x0200};
    EXPECT_EQ(encode_raw_samples(samples), (std::vector<std::uint8_t>{0x01, 0x00, 0xFF, 0x03, 0x00, 0x02}));
    EXPECT_EQ(decode_raw_samples(encode_raw_samples(samples), 10), samples);
    EXPECT_THROW(decode_raw_samples(std::vector<std::uint8_t>{1, 2, 3}, 10), std::invalid_argument);
    EXPECT_THROW(decode_raw_samples(std::vector<std::uint8_t>{0x00, 0x04}, 10), std::invalid_argument);
}

TEST(RawFormat, FileRoundTripWithSidecar) {
    const auto dir = scratch_dir("raw");
    const auto block = simulate_block(NoiseModelParams{}, AdcConfig{}, 5000, 3);
    write_raw_file(dir / "x.u16", block, {NoiseModelParams{}, 3, std::nullopt, true});
    EXPECT_EQ(fs::file_size(dir / "x.u16"), 10000u);
    ASSERT_TRUE(fs::exists(sidecar_path(dir / "x.u16")));
    const auto side = read_json_file(sidecar_path(dir / "x.u16"));
    EXPECT_EQ(side.at("count").get<std::size_t>(), 5000u);
    EXPECT_EQ(side.at("bits").get<int>(), 10);

    const auto back = read_raw_file(dir / "x.u16");
    EXPECT_EQ(back.samples, block.samples);
    EXPECT_EQ(back.adc.bits, 10);
    fs::remove_all(dir);
}

TEST(SeedFormat, ExactLayout) {
    ToeplitzSeed seed{2, 3, BitStream(4)};
    seed.bits.set(0, true);
    seed.bits.set(3, true);
    const auto bytes = encode_seed(seed);
    const std::vector<std::uint8_t> expect{'Q', 'R', 'N', 'G', 'S', 'E', 'E', 'D', 2, 0, 0, 0, 3, 0, 0, 0, 0x09};
    EXPECT_EQ(bytes, expect);
    const auto back = decode_seed(bytes);
    EXPECT_EQ(back.m, 2u);
    EXPECT_EQ(back.n, 3u);
    EXPECT_EQ(back.bits, seed.bits);

    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_seed(bad), std::invalid_argument);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(decode_seed(bad), std::invalid_argument);
}

TEST(SeedFormat, FileRoundTrip) {
    const auto dir = scratch_dir("seed");
    const auto seed = seed_from_entropy(5, 771, 1024);
    write_seed_file(dir / "s.qseed", seed);
    EXPECT_EQ(fs::file_size(dir / "s.qseed"), 16u + (771 + 1024 - 1 + 7) / 8);
    const auto back = read_seed_file(dir / "s.qseed");
    EXPECT_EQ(back.m, seed.m);
    EXPECT_EQ(back.n, seed.n);
    EXPECT_EQ(back.bits, seed.bits);
    fs::remove_all(dir);
}

TEST(BitstreamFormat, RoundTripKeepsBitCount) {
    const auto dir = scratch_dir("bits");
    BitStream bits;
    for (int i = 0; i < 1001; ++i) {
        bits.push_back(i % 3 == 0);
    }
    write_bitstream_file(dir / "b.bin", bits, {{"note", "x"}});
    EXPECT_EQ(fs::file_size(dir / "b.bin"), 126u);
    EXPECT_EQ(read_json_file(sidecar_path(dir / "b.bin")).at("bit_count").get<std::size_t>(), 1001u);
    EXPECT_EQ(read_bitstream_file(dir / "b.bin"), bits);
    fs::remove_all(dir);
}

TEST(Files, MissingFileThrows) {
    EXPECT_THROW(read_file_bytes("/nonexistent/qrng/file"), std::runtime_error);
}
