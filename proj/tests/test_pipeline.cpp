#include "qrng/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qrng;

namespace {

PipelineConfig small_config(std::uint64_t raw_bits) {
    auto c = parse_config("noise_seed = 11\ntoeplitz_seed = 12\n");
    c.raw_bits = raw_bits;
    c.analysis_bits = 200'000;
    return c;
}

RunOptions in_memory() {
    RunOptions o;
    o.write_files = false;
    o.keep_output = true;
    o.analyze = false;
    return o;
}

}  // namespace

TEST(NominalRates, LabelArithmetic) {
    EXPECT_DOUBLE_EQ(nominal_raw_rate(2.5e9, 10), 25e9);
    const double out = nominal_output_rate(2.5e9, 10, 0.753);
    EXPECT_NEAR(out, 18.825e9, 1.0);
    EXPECT_LE(std::abs(out - 18.8e9) / 18.8e9, 0.002);
}

TEST(ChunkPlan, WholeBlocksAndBytes) {
    AdcConfig adc;
    for (const auto& geo : {ExtractorConfig::for_ratio(0.753), ExtractorConfig{1024, 771, 64}, ExtractorConfig{7, 3, 1}}) {
        const auto plan = plan_chunks(adc, geo, 5, 0);
        const std::size_t bits = plan.samples_per_chunk * 10;
        EXPECT_EQ(bits % geo.n, 0u) << geo.n;
        EXPECT_EQ(bits / geo.n * geo.m % 8, 0u) << geo.n;
        EXPECT_TRUE(plan.unbounded());
    }
    const auto plan = plan_chunks(adc, ExtractorConfig::for_ratio(0.753), 256, 100'000);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < plan.chunk_count(); ++i) {
        total += plan.samples_in_chunk(i);
    }
    EXPECT_EQ(total, 100'000u);
}

TEST(ResolveExtractor, RatioMustFitEntropy) {
    auto c = small_config(1'000'000);
    const auto geo = resolve_extractor(c, 7.71);
    EXPECT_EQ(geo.n, 1000u);
    EXPECT_EQ(geo.m, 753u);
    EXPECT_THROW(resolve_extractor(c, 7.0), ConfigError);
    c.target_ratio.reset();
    const auto sized = resolve_extractor(c, 7.71);
    EXPECT_LE(sized.ratio() * 10.0, 7.71);
}

TEST(RunPipeline, ConservesBits) {
    const auto r = run_pipeline(small_config(2'000'000), in_memory());
    EXPECT_EQ(r.extractor.n, 1000u);
    EXPECT_EQ(r.extractor.m, 753u);
    EXPECT_EQ(r.raw_bits_used, 2'000'000u);
    EXPECT_EQ(r.extracted_bits, 2'000'000u / 1000u * 753u);
    ASSERT_TRUE(r.output);
    EXPECT_EQ(r.output->size(), r.extracted_bits);
    EXPECT_EQ(r.throughput.ratio, 753.0 / 1000.0);
    EXPECT_NEAR(r.entropy.analytic.min_entropy_bits_per_sample, 7.71, 0.1);
}

TEST(RunPipeline, WorkerCountDoesNotChangeOutput) {
    auto c = small_config(3'000'000);
    c.chunk_blocks = 64;
    c.workers = 1;
    const auto one = run_pipeline(c, in_memory());
    c.workers = 8;
    const auto eight = run_pipeline(c, in_memory());
    EXPECT_EQ(one.output->to_bytes(), eight.output->to_bytes());
    c.fresh_seed_per_block = true;
    c.workers = 1;
    const auto fresh_one = run_pipeline(c, in_memory());
    c.workers = 3;
    const auto fresh_three = run_pipeline(c, in_memory());
    EXPECT_EQ(fresh_one.output->to_bytes(), fresh_three.output->to_bytes());
    EXPECT_NE(fresh_one.output->to_bytes(), one.output->to_bytes());
}

TEST(RunPipeline, AnalysisOfExtractedOutputPasses) {
    auto opts = in_memory();
    opts.analyze = true;
    const auto r = run_pipeline(small_config(4'000'000), opts);
    EXPECT_TRUE(all_passed(r.analysis.tests));
}

TEST(BenchExtractor, RejectsBadArguments) {
    auto c = small_config(1'000'000);
    EXPECT_THROW(bench_extractor(c, 0.5, 1), std::invalid_argument);
    c.target_ratio.reset();
    c.m_explicit = true;
    c.extractor.m = 0;
    EXPECT_THROW(bench_extractor(c, 1.0, 1), ConfigError);
}

TEST(BenchExtractor, ReportsRatio) {
    const auto t = bench_extractor(small_config(1'000'000), 1.0, 1);
    EXPECT_EQ(t.ratio, 0.753);
    EXPECT_GE(t.wall_seconds, 1.0);
    EXPECT_GT(t.extracted_bits, 0u);
    EXPECT_NEAR(t.extracted_bits_per_s / t.raw_bits_per_s, 0.753, 1e-9);
}
