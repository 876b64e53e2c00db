#include "oracles.hpp"

#include "qrng/analysis.hpp"
#include "qrng/entropy.hpp"
#include "qrng/noise_model.hpp"
#include "qrng/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qrng;

namespace {

Histogram uniform_histogram(std::uint64_t per_code) {
    auto h = Histogram::for_adc(AdcConfig{});
    for (auto& c : h.counts) {
        c = per_code;
    }
    h.total = per_code * h.counts.size();
    return h;
}

}  // namespace

TEST(MinEntropyEmpirical, UniformIsTenBits) {
    EXPECT_DOUBLE_EQ(min_entropy_empirical(uniform_histogram(5)).min_entropy_bits_per_sample, 10.0);
}

TEST(MinEntropyEmpirical, DeltaIsZeroBits) {
    auto h = Histogram::for_adc(AdcConfig{});
    for (int i = 0; i < 100; ++i) {
        h.add(300);
    }
    const auto r = min_entropy_empirical(h);
    EXPECT_DOUBLE_EQ(r.min_entropy_bits_per_sample, 0.0);
    EXPECT_DOUBLE_EQ(r.p_max, 1.0);
}

TEST(MinEntropyEmpirical, PmaxAtTargetGives771Bits) {
    // One code carries 2^-7.71 of the mass, the rest is spread thinner.
    const double pmax = std::exp2(-7.71);
    const std::uint64_t total = 1'000'000'000;
    auto h = Histogram::for_adc(AdcConfig{});
    h.counts[512] = static_cast<std::uint64_t>(std::llround(pmax * total));
    const std::uint64_t rest = total - h.counts[512];
    for (std::size_t c = 0; c < h.counts.size(); ++c) {
        if (c != 512) {
            h.counts[c] = rest / 1023;
        }
    }
    h.counts[0] += rest % 1023;
    h.total = total;
    EXPECT_NEAR(min_entropy_empirical(h).min_entropy_bits_per_sample, 7.71, 1e-6);
}

TEST(MinEntropyEmpirical, ScaleInvariant) {
    auto h = Histogram::for_adc(AdcConfig{});
    for (std::size_t c = 0; c < h.counts.size(); ++c) {
        h.counts[c] = 1 + c % 17;
        h.total += h.counts[c];
    }
    auto scaled = h;
    for (auto& c : scaled.counts) {
        c *= 13;
    }
    scaled.total *= 13;
    EXPECT_DOUBLE_EQ(min_entropy_empirical(h).min_entropy_bits_per_sample,
                     min_entropy_empirical(scaled).min_entropy_bits_per_sample);
}

TEST(MinEntropyEmpirical, EmptyHistogramIsAnError) {
    EXPECT_THROW(min_entropy_empirical(Histogram::for_adc(AdcConfig{})), std::invalid_argument);
}

TEST(MinEntropyGaussian, SigmaZeroIsZeroBits) {
    EXPECT_DOUBLE_EQ(min_entropy_gaussian(0.0, AdcConfig{}, 512.0).min_entropy_bits_per_sample, 0.0);
}

TEST(MinEntropyGaussian, MatchesNumericIntegration) {
    for (double sigma : {0.7, 5.0, 20.0, 83.6, 200.0, 600.0}) {
        const auto lib = gaussian_code_masses(sigma, AdcConfig{}, 512.0);
        const auto ref = oracle::gaussian_bin_masses(sigma, 512.0, 10);
        double worst = 0.0;
        for (std::size_t k = 0; k < lib.size(); ++k) {
            worst = std::max(worst, std::abs(lib[k] - ref[k]));
        }
        EXPECT_LT(worst, 1e-9) << "sigma " << sigma;
        EXPECT_NEAR(min_entropy_gaussian(sigma, AdcConfig{}, 512.0).min_entropy_bits_per_sample,
                    oracle::min_entropy_of(ref), 1e-8);
    }
}

TEST(MinEntropyGaussian, Sigma836GivesAbout771Bits) {
    EXPECT_NEAR(min_entropy_gaussian(83.6, AdcConfig{}, 512.0).min_entropy_bits_per_sample, 7.71, 0.005);
}

TEST(MinEntropyGaussian, SigmaForTargetAgreesWithBisectionOracle) {
    const double lib = sigma_for_min_entropy(7.71, AdcConfig{}, 512.0);
    const double ref = oracle::sigma_for_entropy_bisection(7.71, 512.0, 10);
    EXPECT_NEAR(lib, ref, 1e-6 * ref);
    EXPECT_NEAR(lib, 83.6, 0.1);
}

TEST(MinEntropyGaussian, HugeSigmaApproachesOneBit) {
    // Almost all mass lands on the two clamp codes, about half each.
    const double h = min_entropy_gaussian(1e4, AdcConfig{}, 512.0).min_entropy_bits_per_sample;
    EXPECT_GT(h, 1.0);
    EXPECT_LT(h, 1.1);
    EXPECT_LT(min_entropy_gaussian(1e6, AdcConfig{}, 512.0).min_entropy_bits_per_sample, 1.001);
}

TEST(MinEntropyGaussian, EmpiricalConvergesToAnalytic) {
    NoiseModelParams p;
    p.quantum_slope = 0.0;
    for (double sigma : {20.0, 83.6, 200.0}) {
        p.classical_variance = sigma * sigma;
        const auto block = simulate_block(p, AdcConfig{}, 10'000'000, derive_seed(5, 9, std::llround(sigma)));
        const auto emp = min_entropy_empirical(histogram(block));
        const auto ana = min_entropy_gaussian(sigma, AdcConfig{}, 512.0);
        EXPECT_NEAR(emp.min_entropy_bits_per_sample, ana.min_entropy_bits_per_sample, 0.05) << sigma;
        if (sigma == 83.6) {
            EXPECT_NEAR(emp.p_max / ana.p_max, 1.0, 0.05);
        }
    }
}

TEST(FitVarianceLine, ExactLine) {
    const std::vector<SweepPoint> pts{{0, 4}, {1, 7}, {2, 10}, {3, 13}};
    const auto fit = fit_variance_line(pts);
    EXPECT_NEAR(fit.slope, 3.0, 1e-12);
    EXPECT_NEAR(fit.intercept, 4.0, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitVarianceLine, NeedsTwoDistinctPowers) {
    EXPECT_THROW(fit_variance_line(std::vector<SweepPoint>{{1, 2}}), std::invalid_argument);
    EXPECT_THROW(fit_variance_line(std::vector<SweepPoint>{{1, 2}, {1, 3}}), std::invalid_argument);
}

TEST(FitVarianceLine, MatchesNormalEquations) {
    Xoshiro256pp rng(31);
    std::vector<SweepPoint> pts;
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
        const double p = 0.1 * i;
        const double v = 100.0 + 40.0 * p + 10.0 * (rng.uniform01() - 0.5);
        pts.push_back({p, v});
        x.push_back(p);
        y.push_back(v);
    }
    const auto fit = fit_variance_line(pts);
    const auto ref = oracle::normal_equations(x, y);
    EXPECT_NEAR(fit.slope, ref.slope, 1e-10 * std::abs(ref.slope));
    EXPECT_NEAR(fit.intercept, ref.intercept, 1e-10 * std::abs(ref.intercept));

    // Residuals are orthogonal to both columns of the design.
    double r0 = 0.0, r1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        r0 += r;
        r1 += r * x[i];
    }
    EXPECT_NEAR(r0, 0.0, 1e-9);
    EXPECT_NEAR(r1, 0.0, 1e-9);
}

TEST(RecommendOutputLength, WorkedValues) {
    EXPECT_EQ(recommend_output_length(7.71, 1024, 10, 1.0), 789u);
    EXPECT_EQ(recommend_output_length(10.0, 1024, 10, 1.0), 1024u);
    EXPECT_THROW(recommend_output_length(11.0, 1024, 10, 1.0), std::invalid_argument);
    EXPECT_THROW(recommend_output_length(7.0, 1024, 10, 0.0), std::invalid_argument);
}

TEST(RecommendOutputLength, MonotoneInEntropyAndSafety) {
    std::size_t prev = 0;
    for (double h = 0.0; h <= 10.0; h += 0.01) {
        const auto m = recommend_output_length(h, 1024, 10, 0.977);
        EXPECT_GE(m, prev);
        prev = m;
    }
    prev = 0;
    for (double s = 0.05; s <= 1.0; s += 0.01) {
        const auto m = recommend_output_length(7.71, 1024, 10, s);
        EXPECT_GE(m, prev);
        prev = m;
    }
}
