#include "qrng/pipeline.hpp"

#include "qrng/analysis.hpp"
#include "qrng/bounded_queue.hpp"
#include "qrng/formats.hpp"
#include "qrng/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace qrng {

using nlohmann::json;

double nominal_raw_rate(double sample_rate_hz, int bits_per_sample) noexcept {
    return sample_rate_hz * static_cast<double>(bits_per_sample);
}

double nominal_output_rate(double sample_rate_hz, int bits_per_sample, double ratio) noexcept {
    return nominal_raw_rate(sample_rate_hz, bits_per_sample) * ratio;
}

void to_json(json& j, const ThroughputReport& t) {
    j = json{{"raw_bits_per_s", t.raw_bits_per_s},
             {"extracted_bits_per_s", t.extracted_bits_per_s},
             {"ratio", t.ratio},
             {"wall_seconds", t.wall_seconds},
             {"worker_count", t.worker_count},
             {"raw_bits", t.raw_bits},
             {"extracted_bits", t.extracted_bits},
             {"nominal_raw_bps", t.nominal_raw_bps},
             {"nominal_extracted_bps", t.nominal_extracted_bps}};
}

std::uint64_t ChunkPlan::chunk_count() const noexcept {
    if (unbounded() || samples_per_chunk == 0) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    return (total_samples + samples_per_chunk - 1) / samples_per_chunk;
}

std::size_t ChunkPlan::samples_in_chunk(std::uint64_t index) const noexcept {
    if (unbounded()) {
        return samples_per_chunk;
    }
    const std::uint64_t start = index * samples_per_chunk;
    return start >= total_samples ? 0 : static_cast<std::size_t>(std::min<std::uint64_t>(samples_per_chunk, total_samples - start));
}

ChunkPlan plan_chunks(const AdcConfig& adc, const ExtractorConfig& extractor, std::size_t chunk_blocks_hint,
                      std::uint64_t total_samples) {
    const auto bits = static_cast<std::size_t>(adc.bits);
    const std::size_t g = std::gcd(extractor.n, bits);
    const std::size_t unit_samples = extractor.n / g;  // smallest run of samples filling whole blocks
    const std::size_t blocks_per_unit = bits / g;
    const std::size_t byte_step = 8 / std::gcd<std::size_t>(8, (blocks_per_unit * extractor.m) % 8 == 0 ? 8 : (blocks_per_unit * extractor.m) % 8);

    std::size_t units = std::max<std::size_t>(1, (chunk_blocks_hint + blocks_per_unit - 1) / blocks_per_unit);
    units = (units + byte_step - 1) / byte_step * byte_step;
    return ChunkPlan{units * unit_samples, total_samples};
}

namespace {

BitStream extract_chunk(const ToeplitzExtractor& extractor, const ToeplitzSeed& seed, const PipelineConfig& config,
                        const RawSampleBlock& raw, std::uint64_t chunk_index) {
    const BitStream bits = serialize_samples(std::span<const RawSampleBlock>(&raw, 1));
    const auto& geo = extractor.config();
    if (config.fresh_seed_per_block) {
        StreamOptions opts;
        opts.fresh_seed_per_block = true;
        opts.fresh_seed_base = derive_seed(config.toeplitz_seed, SeedStream::fresh_toeplitz, chunk_index);
        return extract_stream(geo, seed, bits, opts);
    }
    const std::size_t blocks = bits.size() / geo.n;
    BitStream out;
    out.reserve(blocks * geo.m);
    std::vector<std::uint64_t> scratch(extractor.scratch_words());
    for (std::size_t b = 0; b < blocks; ++b) {
        extractor.extract_at(bits, b * geo.n, out, scratch);
    }
    return out;
}

}  // namespace

void run_extraction_stages(const PipelineConfig& config, const ExtractorConfig& geometry, const ToeplitzSeed& seed,
                           const ChunkPlan& plan, const std::function<bool(BitStream&&)>& emit) {
    geometry.validate();
    const unsigned workers = std::max(1U, config.workers);
    const std::uint64_t chunk_count = plan.chunk_count();
    const std::size_t max_in_flight = 4 * static_cast<std::size_t>(workers);
    const ToeplitzExtractor extractor(geometry, seed);

    struct RawChunk {
        std::uint64_t index;
        RawSampleBlock raw;
    };
    BoundedQueue<RawChunk> raw_queue(max_in_flight);

    std::mutex mutex;
    std::condition_variable ticket_cv;
    std::condition_variable done_cv;
    std::size_t in_flight = 0;
    std::uint64_t next_index = 0;
    bool stopping = false;
    std::exception_ptr failure;
    std::map<std::uint64_t, BitStream> done;
    unsigned simulators_left = workers;

    auto fail = [&](std::exception_ptr e) {
        {
            std::lock_guard lock(mutex);
            if (!failure) {
                failure = e;
            }
            stopping = true;
        }
        ticket_cv.notify_all();
        done_cv.notify_all();
        raw_queue.close();
    };

    auto simulate_loop = [&] {
        try {
            for (;;) {
                std::uint64_t index = 0;
                {
                    std::unique_lock lock(mutex);
                    ticket_cv.wait(lock, [&] { return stopping || in_flight < max_in_flight; });
                    if (stopping || next_index >= chunk_count) {
                        break;
                    }
                    index = next_index++;
                    ++in_flight;
                }
                const std::size_t count = plan.samples_in_chunk(index);
                RawChunk chunk{index, simulate_block(config.noise, config.adc, count,
                                                     derive_seed(config.noise_seed, SeedStream::raw_chunk, index),
                                                     config.band)};
                if (!raw_queue.push(std::move(chunk))) {
                    break;
                }
            }
        } catch (...) {
            fail(std::current_exception());
        }
        std::lock_guard lock(mutex);
        if (--simulators_left == 0) {
            raw_queue.close();
        }
    };

    auto extract_loop = [&] {
        try {
            while (auto chunk = raw_queue.pop()) {
                BitStream bits = extract_chunk(extractor, seed, config, chunk->raw, chunk->index);
                {
                    std::lock_guard lock(mutex);
                    done.emplace(chunk->index, std::move(bits));
                }
                done_cv.notify_all();
            }
        } catch (...) {
            fail(std::current_exception());
        }
    };

    {
        std::vector<std::jthread> threads;
        threads.reserve(2 * workers);
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back(simulate_loop);
            threads.emplace_back(extract_loop);
        }

        for (std::uint64_t index = 0; index < chunk_count; ++index) {
            BitStream bits;
            {
                std::unique_lock lock(mutex);
                done_cv.wait(lock, [&] { return stopping || done.contains(index); });
                if (stopping) {
                    break;
                }
                auto node = done.extract(index);
                bits = std::move(node.mapped());
            }
            bool keep_going = false;
            try {
                keep_going = emit(std::move(bits));
            } catch (...) {
                fail(std::current_exception());
                break;
            }
            {
                std::lock_guard lock(mutex);
                --in_flight;
                if (!keep_going) {
                    stopping = true;
                }
            }
            ticket_cv.notify_all();
            if (!keep_going) {
                raw_queue.close();
                break;
            }
        }
        // Normal completion: wake anyone still waiting for a ticket.
        {
            std::lock_guard lock(mutex);
            stopping = true;
        }
        ticket_cv.notify_all();
        raw_queue.close();
    }

    if (failure) {
        std::rethrow_exception(failure);
    }
}

EntropyAssessment assess_entropy(const RawSampleBlock& held_out, const NoiseModelParams& params) {
    EntropyAssessment a;
    a.sample_count = held_out.count();
    a.measured_variance = sample_moments(held_out.samples).variance;
    a.sigma_q = std::sqrt(std::max(a.measured_variance - params.classical_variance, 0.0));
    a.empirical = min_entropy_empirical(histogram(held_out));
    a.analytic = min_entropy_gaussian(a.sigma_q, held_out.adc, params.mean_code);
    a.analytic.sample_count = a.sample_count;
    return a;
}

ExtractorConfig resolve_extractor(const PipelineConfig& config, double min_entropy_bits) {
    ExtractorConfig geo;
    if (config.target_ratio) {
        geo = ExtractorConfig::for_ratio(*config.target_ratio, config.extractor.n, config.extractor.k);
    } else if (config.m_explicit) {
        geo = config.extractor;
    } else {
        geo = config.extractor;
        geo.m = recommend_output_length(std::min(min_entropy_bits, static_cast<double>(config.adc.bits)), geo.n,
                                        config.adc.bits, config.safety_factor);
    }
    try {
        geo.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const double bits_needed = geo.ratio() * static_cast<double>(config.adc.bits);
    if (bits_needed > min_entropy_bits + 1e-12) {
        throw ConfigError("config: extraction ratio " + std::to_string(geo.ratio()) + " needs " +
                          std::to_string(bits_needed) + " bits of min-entropy per sample but the source has " +
                          std::to_string(min_entropy_bits));
    }
    return geo;
}

void to_json(json& j, const PipelineResult& r) {
    j = json{{"entropy",
              {{"held_out_samples", r.entropy.sample_count},
               {"measured_variance", r.entropy.measured_variance},
               {"sigma_q", r.entropy.sigma_q},
               {"empirical", r.entropy.empirical},
               {"analytic", r.entropy.analytic}}},
             {"extractor", r.extractor},
             {"throughput", r.throughput},
             {"analysis", r.analysis},
             {"raw_bits_used", r.raw_bits_used},
             {"extracted_bits", r.extracted_bits}};
}

PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    config.validate();
    const auto bits_per_sample = static_cast<std::uint64_t>(config.adc.bits);
    const std::uint64_t raw_samples = config.raw_bits / bits_per_sample;
    if (raw_samples == 0) {
        throw ConfigError("config: raw_bits must cover at least one sample");
    }

    PipelineResult result;

    // Held-out portion for min-entropy evaluation, from its own seed stream.
    const auto held_out_count = std::max<std::uint64_t>(
        config.min_held_out_samples,
        static_cast<std::uint64_t>(std::ceil(static_cast<double>(raw_samples) * config.held_out_fraction)));
    const RawSampleBlock held_out = simulate_block(config.noise, config.adc, held_out_count,
                                                   derive_seed(config.noise_seed, SeedStream::held_out, 0), config.band);
    result.entropy = assess_entropy(held_out, config.noise);
    result.extractor = resolve_extractor(config, result.entropy.analytic.min_entropy_bits_per_sample);
    const ToeplitzSeed seed = seed_from_entropy(config.toeplitz_seed, result.extractor.m, result.extractor.n);

    std::ofstream out_file;
    std::filesystem::path out_path;
    if (options.write_files) {
        std::filesystem::create_directories(config.output_dir);
        out_path = config.output_dir / "extracted.bin";
        out_file.open(out_path, std::ios::binary | std::ios::trunc);
        if (!out_file) {
            throw std::runtime_error("cannot open " + out_path.string() + " for writing");
        }
    }

    BitStream analysis_bits;
    BitStream kept;
    std::uint64_t extracted = 0;
    const ChunkPlan plan = plan_chunks(config.adc, result.extractor, config.chunk_blocks, raw_samples);

    const auto start = std::chrono::steady_clock::now();
    run_extraction_stages(config, result.extractor, seed, plan, [&](BitStream&& chunk) {
        extracted += chunk.size();
        if (out_file.is_open()) {
            // Every chunk but the last is a whole number of bytes.
            const auto bytes = chunk.to_bytes();
            out_file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out_file) {
                throw std::runtime_error("write failed for " + out_path.string());
            }
        }
        if (options.analyze && analysis_bits.size() < config.analysis_bits) {
            const std::size_t take = std::min<std::size_t>(chunk.size(), config.analysis_bits - analysis_bits.size());
            analysis_bits.append(take == chunk.size() ? chunk : chunk.slice(0, take));
        }
        if (options.keep_output) {
            kept.append(chunk);
        }
        return true;
    });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    result.raw_bits_used = raw_samples * bits_per_sample;
    result.extracted_bits = extracted;
    const std::uint64_t expected = result.raw_bits_used / result.extractor.n * result.extractor.m;
    if (extracted != expected) {
        throw std::logic_error("run_pipeline: extracted " + std::to_string(extracted) + " bits, expected " +
                               std::to_string(expected));
    }

    auto& tp = result.throughput;
    tp.ratio = result.extractor.ratio();
    tp.wall_seconds = wall;
    tp.worker_count = config.workers;
    tp.raw_bits = result.raw_bits_used;
    tp.extracted_bits = extracted;
    tp.raw_bits_per_s = wall > 0.0 ? static_cast<double>(tp.raw_bits) / wall : 0.0;
    tp.extracted_bits_per_s = wall > 0.0 ? static_cast<double>(extracted) / wall : 0.0;
    tp.nominal_raw_bps = nominal_raw_rate(config.sample_rate_hz, config.adc.bits);
    tp.nominal_extracted_bps = nominal_output_rate(config.sample_rate_hz, config.adc.bits, tp.ratio);

    if (options.analyze) {
        auto& an = result.analysis;
        an.analyzed_bits = analysis_bits.size();
        if (!analysis_bits.empty()) {
            an.tests = nist_subset(analysis_bits, config.alpha);
        }
        if (analysis_bits.size() >= config.autocorr_lags + 2 && analysis_bits.popcount() != 0 &&
            analysis_bits.popcount() != analysis_bits.size()) {
            an.extracted_autocorr = autocorrelation(analysis_bits, config.autocorr_lags);
        }
        const auto moments = sample_moments(held_out.samples);
        if (held_out.count() >= config.autocorr_lags + 2 && moments.variance > 0.0) {
            an.raw_autocorr = autocorrelation(std::span<const std::uint16_t>(held_out.samples), config.autocorr_lags);
        }
        if (held_out.count() >= 256) {
            an.raw_psd = psd_welch(std::span<const std::uint16_t>(held_out.samples), 256, 128, Window::hann);
        }
    }

    if (options.write_files) {
        out_file.close();
        json side = {{"n", result.extractor.n}, {"m", result.extractor.m}, {"k", result.extractor.k},
                     {"noise_seed", config.noise_seed}, {"toeplitz_seed", config.toeplitz_seed}};
        side["bit_count"] = extracted;
        side["bit_order"] = "lsb_first";
        write_json_file(sidecar_path(out_path), side);
        result.files.push_back(out_path);

        const auto seed_path = config.output_dir / "seed.qseed";
        write_seed_file(seed_path, seed);
        result.files.push_back(seed_path);

        const auto held_path = config.output_dir / "held_out.raw";
        RawMetadata meta;
        meta.params = config.noise;
        meta.seed = derive_seed(config.noise_seed, SeedStream::held_out, 0);
        meta.band = config.band;
        write_raw_file(held_path, held_out, meta);
        result.files.push_back(held_path);

        if (result.analysis.raw_autocorr) {
            write_autocorr_csv(config.output_dir / "autocorr_raw.csv", *result.analysis.raw_autocorr);
            result.files.push_back(config.output_dir / "autocorr_raw.csv");
        }
        if (result.analysis.extracted_autocorr) {
            write_autocorr_csv(config.output_dir / "autocorr_extracted.csv", *result.analysis.extracted_autocorr);
            result.files.push_back(config.output_dir / "autocorr_extracted.csv");
        }
        if (result.analysis.raw_psd) {
            write_psd_csv(config.output_dir / "psd_raw.csv", *result.analysis.raw_psd);
            result.files.push_back(config.output_dir / "psd_raw.csv");
        }

        json report = result;
        report["noise_model"] = config.noise;
        report["noise_model"]["synthetic"] = true;
        report["adc"] = config.adc;
        if (config.band) {
            report["band"] = *config.band;
        }
        const auto report_path = config.output_dir / "report.json";
        write_json_file(report_path, report);
        result.files.push_back(report_path);
    }

    if (options.keep_output) {
        result.output = std::move(kept);
    }
    return result;
}

ThroughputReport bench_extractor(const PipelineConfig& config, double duration_s, unsigned workers) {
    if (!(duration_s >= 1.0)) {
        throw std::invalid_argument("bench_extractor: duration must be at least 1 s");
    }
    config.validate();
    workers = std::max(1U, workers);
    const double h_inf =
        min_entropy_gaussian(std::sqrt(config.noise.quantum_variance()), config.adc, config.noise.mean_code)
            .min_entropy_bits_per_sample;
    const ExtractorConfig geo = resolve_extractor(config, h_inf);
    const ToeplitzSeed seed = seed_from_entropy(config.toeplitz_seed, geo.m, geo.n);
    const ToeplitzExtractor extractor(geo, seed);

    constexpr std::size_t input_blocks = 256;
    BitStream input;
    {
        Xoshiro256pp rng(derive_seed(config.noise_seed, SeedStream::bench, 0));
        std::size_t left = input_blocks * geo.n;
        input.reserve(left);
        while (left > 0) {
            const auto take = static_cast<unsigned>(std::min<std::size_t>(64, left));
            input.append_bits(rng(), take);
            left -= take;
        }
    }

    std::vector<std::uint64_t> blocks_done(workers, 0);
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(duration_s));
    {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                std::vector<std::uint64_t> scratch(extractor.scratch_words());
                BitStream out;
                out.reserve(64 * geo.m);
                std::uint64_t count = 0;
                std::size_t block = w % input_blocks;
                while (std::chrono::steady_clock::now() < deadline) {
                    out.clear();
                    for (int i = 0; i < 64; ++i) {
                        extractor.extract_at(input, block * geo.n, out, scratch);
                        block = (block + 1) % input_blocks;
                    }
                    count += 64;
                }
                blocks_done[w] = count;
            });
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::uint64_t blocks = std::accumulate(blocks_done.begin(), blocks_done.end(), std::uint64_t{0});

    ThroughputReport t;
    t.ratio = geo.ratio();
    t.wall_seconds = wall;
    t.worker_count = workers;
    t.raw_bits = blocks * geo.n;
    t.extracted_bits = blocks * geo.m;
    t.raw_bits_per_s = static_cast<double>(t.raw_bits) / wall;
    t.extracted_bits_per_s = static_cast<double>(t.extracted_bits) / wall;
    t.nominal_raw_bps = nominal_raw_rate(config.sample_rate_hz, config.adc.bits);
    t.nominal_extracted_bps = nominal_output_rate(config.sample_rate_hz, config.adc.bits, t.ratio);
    return t;
}

}  // namespace qrng
