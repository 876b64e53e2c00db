#include "qrng/analysis.hpp"
#include "qrng/noise_model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace qrng;

TEST(Quantize, MidpointAndClamps) {
    const AdcConfig adc;
    EXPECT_EQ(quantize(0.5 * (adc.full_scale_min + adc.full_scale_max), adc), 512);
    EXPECT_EQ(quantize(adc.full_scale_min - 1.0, adc), 0);
    EXPECT_EQ(quantize(-1e300, adc), 0);
    EXPECT_EQ(quantize(adc.full_scale_max, adc), 1023);
    EXPECT_EQ(quantize(1e300, adc), 1023);
}

TEST(Quantize, Monotone) {
    AdcConfig adc;
    adc.full_scale_min = -3.0;
    adc.full_scale_max = 5.0;
    std::uint16_t prev = 0;
    for (double v = -4.0; v <= 6.0; v += 1e-3) {
        const auto q = quantize(v, adc);
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(SimulateBlock, ZeroVarianceIsConstant) {
    NoiseModelParams p;
    p.quantum_slope = 0.0;
    p.classical_variance = 0.0;
    const AdcConfig adc;
    const auto block = simulate_block(p, adc, 1000, 5);
    EXPECT_TRUE(std::all_of(block.samples.begin(), block.samples.end(),
                            [&](std::uint16_t s) { return s == quantize(p.mean_code, adc); }));
}

TEST(SimulateBlock, VarianceWithinOnePercentAt1e7) {
    NoiseModelParams p;
    p.quantum_slope = 0.0;
    p.classical_variance = 100.0;
    const auto block = simulate_block(p, AdcConfig{}, 10'000'000, 99);
    // Sampling sd of the variance is 100 * sqrt(2 / 1e7) ~ 0.045; quantization adds ~1/12.
    EXPECT_NEAR(sample_moments(block.samples).variance, 100.0, 1.0);
}

TEST(SimulateBlock, VarianceAdditivityWithin5Sigma) {
    NoiseModelParams p;
    p.quantum_slope = 500.0;
    p.classical_variance = 30.0;
    p.lo_power_mw = 2.0;
    constexpr std::size_t n = 2'000'000;
    const auto block = simulate_block(p, AdcConfig{}, n, 1234);
    const double var = p.total_variance();
    const double five_sigma = 5.0 * var * std::sqrt(2.0 / n) + 1.0 / 12.0;
    EXPECT_NEAR(sample_moments(block.samples).variance, var, five_sigma);
}

TEST(SimulateBlock, DeterministicPerSeed) {
    const NoiseModelParams p;
    const AdcConfig adc;
    EXPECT_EQ(simulate_block(p, adc, 4096, 77).samples, simulate_block(p, adc, 4096, 77).samples);
    EXPECT_NE(simulate_block(p, adc, 4096, 77).samples, simulate_block(p, adc, 4096, 78).samples);
}

TEST(SimulateBlock, RejectsZeroCount) { EXPECT_THROW(simulate_block({}, {}, 0, 1), std::invalid_argument); }

TEST(SweepLoPower, ZeroPowerGivesClassicalVariance) {
    NoiseModelParams p;
    p.quantum_slope = 3.0;
    p.classical_variance = 4.0;
    const std::vector<double> powers{0.0};
    const auto pts = sweep_lo_power(p, powers, AdcConfig{}, 1'000'000, 3);
    ASSERT_EQ(pts.size(), 1u);
    // Quantizing sigma = 2 adds about 1/12 code^2.
    EXPECT_NEAR(pts[0].variance, 4.0 + 1.0 / 12.0, 0.05);
}

TEST(SweepLoPower, FollowsTheLine) {
    NoiseModelParams p;
    p.quantum_slope = 3.0;
    p.classical_variance = 4.0;
    const std::vector<double> powers{0, 1, 2, 3};
    const auto pts = sweep_lo_power(p, powers, AdcConfig{}, 1'000'000, 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double expect = 4.0 + 3.0 * powers[i];
        EXPECT_DOUBLE_EQ(pts[i].power_mw, powers[i]);
        EXPECT_NEAR(pts[i].variance, expect + 1.0 / 12.0, 5.0 * expect * std::sqrt(2.0 / 1e6) + 0.02);
    }
}

TEST(SweepLoPower, EmptyPowersIsAnError) {
    EXPECT_THROW(sweep_lo_power({}, std::vector<double>{}, AdcConfig{}, 100, 1), std::invalid_argument);
}

TEST(BandShape, SuppressesDcAndStaysFlatInBand) {
    NoiseModelParams p;
    p.quantum_slope = 0.0;
    p.classical_variance = 2500.0;
    const BandShape band{0.1, 0.4};
    const auto block = simulate_block(p, AdcConfig{}, 1 << 20, 8, band);
    const auto psd = psd_welch(block.samples, 1024, 512);

    std::vector<double> in_band;
    for (std::size_t i = 0; i < psd.frequencies.size(); ++i) {
        const double f = psd.frequencies[i];
        if (f >= 0.12 && f <= 0.38) {
            in_band.push_back(psd.power[i]);
        }
    }
    ASSERT_FALSE(in_band.empty());
    std::sort(in_band.begin(), in_band.end());
    const double median = in_band[in_band.size() / 2];
    EXPECT_LE(10.0 * std::log10(in_band.back() / median), 3.0);
    EXPECT_GE(10.0 * std::log10(in_band.front() / median), -3.0);
    EXPECT_LE(10.0 * std::log10(psd.power[0] / median), -20.0);
    EXPECT_LE(10.0 * std::log10(psd.power[2] / median), -20.0);
}

TEST(NoiseModel, DefaultsCarryTheTargetEntropy) {
    const NoiseModelParams p;
    EXPECT_DOUBLE_EQ(p.lo_power_mw, 3.36);
    EXPECT_DOUBLE_EQ(p.mean_code, 512.0);
    EXPECT_GT(p.quantum_variance(), 0.0);
}
