#include "qrng/config.hpp"

#include <gtest/gtest.h>

using namespace qrng;

TEST(Config, ParsesWithComments) {
    const auto c = parse_config(
        "# header\n"
        "noise_seed = 42\n"
        "toeplitz_seed=7   # trailing\n"
        "\n"
        "  workers = 4\n"
        "target_ratio = 0.5\n"
        "band_low = 0.1\n"
        "band_high = 0.4\n");
    EXPECT_EQ(c.noise_seed, 42u);
    EXPECT_EQ(c.toeplitz_seed, 7u);
    EXPECT_EQ(c.workers, 4u);
    ASSERT_TRUE(c.target_ratio);
    EXPECT_DOUBLE_EQ(*c.target_ratio, 0.5);
    ASSERT_TRUE(c.band);
    EXPECT_DOUBLE_EQ(c.band->low_cut_fraction, 0.1);
    EXPECT_DOUBLE_EQ(c.band->high_cut_fraction, 0.4);
}

TEST(Config, SeedsAreMandatory) {
    EXPECT_THROW(parse_config("noise_seed = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("toeplitz_seed = 1\n"), ConfigError);
    EXPECT_THROW(parse_config(""), ConfigError);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\nbogus = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = x\ntoeplitz_seed = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\nworkers\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\nworkers = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\nk = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\ntarget_ratio = 1.5\n"), ConfigError);
}

TEST(Config, NoneClearsRatioAndExplicitMIsChecked) {
    auto c = parse_config("noise_seed = 1\ntoeplitz_seed = 2\ntarget_ratio = none\nm = 700\n");
    EXPECT_FALSE(c.target_ratio);
    EXPECT_TRUE(c.m_explicit);
    EXPECT_EQ(c.extractor.m, 700u);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\ntarget_ratio = none\nm = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("noise_seed = 1\ntoeplitz_seed = 2\ntarget_ratio = none\nm = 1024\n"), ConfigError);
}

TEST(Config, FormatRoundTrips) {
    auto c = parse_config("noise_seed = 99\ntoeplitz_seed = 3\nworkers = 8\nfresh_seed_per_block = true\n");
    c.noise.quantum_slope = 2076.6255855185177;
    const auto back = parse_config(format_config(c));
    EXPECT_EQ(back.noise_seed, 99u);
    EXPECT_EQ(back.toeplitz_seed, 3u);
    EXPECT_EQ(back.workers, 8u);
    EXPECT_TRUE(back.fresh_seed_per_block);
    EXPECT_EQ(back.noise.quantum_slope, c.noise.quantum_slope);
    EXPECT_EQ(back.target_ratio, c.target_ratio);
    EXPECT_EQ(back.extractor.n, c.extractor.n);
    EXPECT_EQ(back.extractor.k, c.extractor.k);
    EXPECT_EQ(format_config(back), format_config(c));
}

TEST(Config, ApplySettingOverrides) {
    auto c = parse_config("noise_seed = 1\ntoeplitz_seed = 2\n");
    apply_setting(c, "raw_bits", "1000");
    EXPECT_EQ(c.raw_bits, 1000u);
    EXPECT_THROW(apply_setting(c, "nope", "1"), ConfigError);
}

TEST(Config, MissingFileThrows) {
    EXPECT_THROW(load_config("/nonexistent/qrng.conf"), ConfigError);
}
