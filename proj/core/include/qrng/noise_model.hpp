#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qrng {

/// ADC geometry. Analog values in [full_scale_min, full_scale_max] map linearly onto
/// codes [0, 2^bits - 1]. The default maps analog units one-to-one onto 10-bit codes.
struct AdcConfig {
    int bits = 10;
    double full_scale_min = 0.0;
    double full_scale_max = 1023.0;

    std::uint32_t max_code() const noexcept { return (std::uint32_t{1} << bits) - 1; }
    std::size_t code_count() const noexcept { return std::size_t{1} << bits; }
    /// Codes per analog unit.
    double scale() const noexcept { return static_cast<double>(max_code()) / (full_scale_max - full_scale_min); }
    /// Throws std::invalid_argument on a malformed config (bits outside [1, 16], empty range).
    void validate() const;
};

/// Parametric homodyne source: variance = quantum_slope * lo_power_mw + classical_variance,
/// all in code^2. The defaults are synthetic, chosen so the quantum part alone carries
/// 7.71 bits of min-entropy per 10-bit sample at 3.36 mW.
struct NoiseModelParams {
    double quantum_slope = 2076.6255855185177;  // code^2 / mW
    double classical_variance = 64.0;           // code^2, measured with the LO off
    double lo_power_mw = 3.36;
    double mean_code = 512.0;

    double quantum_variance() const noexcept { return quantum_slope * lo_power_mw; }
    double total_variance() const noexcept { return quantum_variance() + classical_variance; }
    void validate() const;
};

/// Pass band, as fractions of the sample rate, applied to white noise before quantization.
struct BandShape {
    double low_cut_fraction = 0.0;
    double high_cut_fraction = 0.5;

    void validate() const;
};

struct RawSampleBlock {
    std::vector<std::uint16_t> samples;
    AdcConfig adc;

    std::size_t count() const noexcept { return samples.size(); }
    /// Throws if any sample exceeds the ADC code range.
    void validate() const;
};

/// Linear scaling onto the code range, round half up, saturating at both ends.
std::uint16_t quantize(double value, const AdcConfig& adc) noexcept;

/// Draws `count` Gaussian samples (mean_code, total_variance) in code units, optionally
/// band-shapes them, and quantizes. A given (params, adc, count, seed, band) always
/// yields the same block.
RawSampleBlock simulate_block(const NoiseModelParams& params, const AdcConfig& adc, std::size_t count,
                              std::uint64_t prng_seed, const std::optional<BandShape>& band = std::nullopt);

struct SweepPoint {
    double power_mw = 0.0;
    double variance = 0.0;
};

/// One simulated block per LO power, returning its empirical (population) variance.
/// Each power uses its own seed stream derived from `prng_seed`.
std::vector<SweepPoint> sweep_lo_power(const NoiseModelParams& params_base, std::span<const double> powers,
                                       const AdcConfig& adc, std::size_t count, std::uint64_t prng_seed);

/// Mean and population variance of the codes.
struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;
};
SampleMoments sample_moments(std::span<const std::uint16_t> samples) noexcept;

}  // namespace qrng
