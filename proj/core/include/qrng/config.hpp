#pragma once

#include "qrng/noise_model.hpp"
#include "qrng/toeplitz.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qrng {

/// Everything a pipeline run depends on. Two runs with equal configs produce identical
/// output regardless of `workers`.
struct PipelineConfig {
    NoiseModelParams noise;
    AdcConfig adc;
    std::optional<BandShape> band;

    /// n and k are always used. m is used only when neither target_ratio nor automatic
    /// sizing applies (see m_explicit).
    ExtractorConfig extractor;
    bool m_explicit = false;
    /// When set, (n, m, k) are derived so that m/n equals this exactly.
    std::optional<double> target_ratio = 0.753;
    double safety_factor = 0.977;

    double sample_rate_hz = 2.5e9;  // nominal label only

    std::uint64_t noise_seed = 0;
    std::uint64_t toeplitz_seed = 0;
    bool fresh_seed_per_block = false;

    std::uint64_t raw_bits = 100'000'000;
    std::size_t chunk_blocks = 256;
    unsigned workers = 1;

    double held_out_fraction = 1.0 / 256.0;
    std::size_t min_held_out_samples = 4096;

    std::size_t analysis_bits = 10'000'000;
    std::size_t autocorr_lags = 100;
    double alpha = 0.01;

    std::filesystem::path output_dir = "qrng_out";

    /// Range checks on every field; throws ConfigError.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the key-value config document:
///
///     # comment
///     noise_seed = 42
///     toeplitz_seed = 7
///     target_ratio = 0.753     # or "none"
///
/// noise_seed and toeplitz_seed are mandatory. Unknown keys are errors.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies a single `key = value` setting on top of an existing config.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Renders a config in the same format parse_config() reads.
std::string format_config(const PipelineConfig& config);

}  // namespace qrng
