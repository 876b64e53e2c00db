#pragma once

#include "qrng/bitstream.hpp"
#include "qrng/config.hpp"
#include "qrng/entropy.hpp"
#include "qrng/report.hpp"
#include "qrng/toeplitz.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace qrng {

/// sample_rate_hz * bits: the raw digitizer rate (2.5 GSa/s * 10 bits = 25 Gbps).
double nominal_raw_rate(double sample_rate_hz, int bits_per_sample) noexcept;
/// Raw rate scaled by the extraction ratio m/n.
double nominal_output_rate(double sample_rate_hz, int bits_per_sample, double ratio) noexcept;

struct ThroughputReport {
    double raw_bits_per_s = 0.0;
    double extracted_bits_per_s = 0.0;
    double ratio = 0.0;  // exactly m/n
    double wall_seconds = 0.0;
    unsigned worker_count = 1;
    std::uint64_t raw_bits = 0;
    std::uint64_t extracted_bits = 0;
    double nominal_raw_bps = 0.0;
    double nominal_extracted_bps = 0.0;
};
void to_json(nlohmann::json& j, const ThroughputReport& t);

/// Chunking of the raw sample stream. Every chunk except possibly the last carries a
/// whole number of n-bit blocks, and its extracted output is a whole number of bytes.
struct ChunkPlan {
    std::size_t samples_per_chunk = 0;
    std::uint64_t total_samples = 0;  // 0 means unbounded

    bool unbounded() const noexcept { return total_samples == 0; }
    std::uint64_t chunk_count() const noexcept;
    std::size_t samples_in_chunk(std::uint64_t index) const noexcept;
};

ChunkPlan plan_chunks(const AdcConfig& adc, const ExtractorConfig& extractor, std::size_t chunk_blocks_hint,
                      std::uint64_t total_samples);

/// Three-stage simulate -> extract -> emit pipeline.
///
/// `workers` threads simulate chunks (chunk i always uses seed
/// derive_seed(noise_seed, raw_chunk, i)), `workers` threads extract them, and the
/// calling thread hands the results to `emit` strictly in chunk order. At most
/// 4 * workers chunks are in flight, so a slow consumer throttles simulation. `emit`
/// returns false to stop early; a worker exception is rethrown here.
void run_extraction_stages(const PipelineConfig& config, const ExtractorConfig& extractor, const ToeplitzSeed& seed,
                           const ChunkPlan& plan, const std::function<bool(BitStream&&)>& emit);

/// Held-out estimate that sizes the extractor.
struct EntropyAssessment {
    std::uint64_t sample_count = 0;
    double measured_variance = 0.0;
    double sigma_q = 0.0;  // sqrt(max(measured - classical_variance, 0))
    EntropyReport empirical;
    EntropyReport analytic;  // quantized Gaussian of sigma_q
};

EntropyAssessment assess_entropy(const RawSampleBlock& held_out, const NoiseModelParams& params);

/// Picks (n, m, k): exact target ratio when configured, explicit m otherwise, or m from
/// recommend_output_length. Throws ConfigError if m/n * bits exceeds `min_entropy_bits`.
ExtractorConfig resolve_extractor(const PipelineConfig& config, double min_entropy_bits);

struct PipelineResult {
    EntropyAssessment entropy;
    ExtractorConfig extractor;
    ThroughputReport throughput;
    AnalysisReport analysis;
    std::uint64_t raw_bits_used = 0;
    std::uint64_t extracted_bits = 0;
    std::vector<std::filesystem::path> files;
    /// Populated only when requested in RunOptions.
    std::optional<BitStream> output;
};
void to_json(nlohmann::json& j, const PipelineResult& r);

struct RunOptions {
    bool write_files = true;
    bool keep_output = false;
    bool analyze = true;
};

/// Held-out estimation, extractor sizing, streaming extraction of raw_bits, analysis of
/// the first analysis_bits output bits, and (optionally) output files in output_dir:
/// extracted.bin(.json), seed.qseed, held_out.raw(.json), report.json and CSV plot data.
PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Sustained extraction throughput on in-memory random input, for at least
/// `duration_s` seconds (>= 1) with `workers` threads.
ThroughputReport bench_extractor(const PipelineConfig& config, double duration_s, unsigned workers);

}  // namespace qrng
