// qrng: command-line front end for the simulate -> estimate -> extract -> analyze pipeline.
//
// Exit codes: 0 all invoked checks passed, 1 a check failed, 2 usage / config / I/O error.

#include "qrng/analysis.hpp"
#include "qrng/config.hpp"
#include "qrng/entropy.hpp"
#include "qrng/formats.hpp"
#include "qrng/noise_model.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/report.hpp"
#include "qrng/rng.hpp"
#include "qrng/stream.hpp"
#include "qrng/toeplitz.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace {

using qrng::PipelineConfig;
using json = nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_error = 2;

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    bool quiet = false;
};

PipelineConfig load(const GlobalArgs& g) {
    PipelineConfig config = g.config_path.empty() ? PipelineConfig{} : qrng::load_config(g.config_path);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw qrng::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        qrng::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!g.output_dir.empty()) {
        config.output_dir = g.output_dir;
    }
    config.validate();
    return config;
}

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }

// Drops per-lag / per-bin arrays; the full report lives in report.json.
json summarize(json doc) {
    if (doc.is_object()) {
        for (const char* key : {"coefficients", "power", "frequencies"}) {
            doc.erase(key);
        }
        for (auto& [key, value] : doc.items()) {
            value = summarize(std::move(value));
        }
    } else if (doc.is_array()) {
        for (auto& value : doc) {
            value = summarize(std::move(value));
        }
    }
    return doc;
}

constexpr double autocorr_floor = 0.99;  // fraction of lags inside 3 sigma

bool autocorr_ok(const qrng::AutocorrResult& a) { return a.fraction_within(3.0) >= autocorr_floor; }

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::uint64_t samples = 1 << 20;
    std::optional<double> power;
    std::string out;
};

int cmd_simulate(const GlobalArgs& g, const SimulateArgs& a) {
    PipelineConfig config = load(g);
    if (a.power) {
        config.noise.lo_power_mw = *a.power;
    }
    const auto block = qrng::simulate_block(config.noise, config.adc, a.samples, config.noise_seed, config.band);
    const std::filesystem::path out = a.out.empty() ? config.output_dir / "raw.u16" : std::filesystem::path(a.out);
    if (out.has_parent_path()) {
        std::filesystem::create_directories(out.parent_path());
    }
    qrng::write_raw_file(out, block, {config.noise, config.noise_seed, config.band, true});
    const auto moments = qrng::sample_moments(block.samples);
    emit({{"file", out.string()},
          {"samples", block.count()},
          {"mean", moments.mean},
          {"variance", moments.variance},
          {"model_variance", config.noise.total_variance()}});
    return exit_ok;
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
    std::string input;
    bool sweep = false;
    std::uint64_t samples = 1'000'000;
    double power_step = 0.5;
    double power_max = 3.5;
};

int cmd_estimate(const GlobalArgs& g, const EstimateArgs& a) {
    const PipelineConfig config = load(g);
    if (a.sweep) {
        std::vector<double> powers;
        for (int i = 0; i * a.power_step <= a.power_max + 1e-12; ++i) {
            powers.push_back(i * a.power_step);
        }
        const auto points = qrng::sweep_lo_power(config.noise, powers, config.adc, a.samples, config.noise_seed);
        const auto fit = qrng::fit_variance_line(points);
        const bool ok = fit.r_squared >= 0.999;
        emit({{"points", points},
              {"fit", fit},
              {"model", {{"slope", config.noise.quantum_slope}, {"intercept", config.noise.classical_variance}}},
              {"linear", ok}});
        return ok ? exit_ok : exit_check_failed;
    }

    qrng::RawSampleBlock block =
        a.input.empty() ? qrng::simulate_block(config.noise, config.adc, a.samples,
                                               qrng::derive_seed(config.noise_seed, qrng::SeedStream::held_out, 0),
                                               config.band)
                        : qrng::read_raw_file(a.input);
    const auto assessment = qrng::assess_entropy(block, config.noise);
    const double h = assessment.analytic.min_entropy_bits_per_sample;
    const std::size_t n = config.extractor.n;
    const std::size_t m_rec = qrng::recommend_output_length(h, n, config.adc.bits, config.safety_factor);
    json doc{{"samples", assessment.sample_count},
             {"measured_variance", assessment.measured_variance},
             {"sigma_q", assessment.sigma_q},
             {"empirical", assessment.empirical},
             {"analytic", assessment.analytic},
             {"recommended", {{"n", n}, {"m", m_rec}}}};
    int rc = exit_ok;
    try {
        const auto geo = qrng::resolve_extractor(config, h);
        doc["extractor"] = geo;
    } catch (const qrng::ConfigError& e) {
        doc["extractor_error"] = e.what();
        rc = exit_check_failed;
    }
    emit(doc);
    return rc;
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
    std::string input;
    std::string seed;
    std::string out;
};

int cmd_extract(const GlobalArgs& g, const ExtractArgs& a) {
    const PipelineConfig config = load(g);
    const auto block = qrng::read_raw_file(a.input);
    const auto assessment = qrng::assess_entropy(block, config.noise);
    const auto geo = qrng::resolve_extractor(config, assessment.analytic.min_entropy_bits_per_sample);

    const std::filesystem::path out = a.out.empty() ? config.output_dir / "extracted.bin" : std::filesystem::path(a.out);
    if (out.has_parent_path()) {
        std::filesystem::create_directories(out.parent_path());
    }
    qrng::ToeplitzSeed seed;
    if (a.seed.empty()) {
        seed = qrng::seed_from_entropy(config.toeplitz_seed, geo.m, geo.n);
        qrng::write_seed_file(std::filesystem::path(out).replace_extension(".qseed"), seed);
    } else {
        seed = qrng::read_seed_file(a.seed);
        if (seed.m != geo.m || seed.n != geo.n) {
            throw qrng::ConfigError("seed file is " + std::to_string(seed.m) + "x" + std::to_string(seed.n) +
                                    ", extractor needs " + std::to_string(geo.m) + "x" + std::to_string(geo.n));
        }
    }

    qrng::StreamOptions opts;
    opts.workers = config.workers;
    opts.fresh_seed_per_block = config.fresh_seed_per_block;
    opts.fresh_seed_base = qrng::derive_seed(config.toeplitz_seed, qrng::SeedStream::fresh_toeplitz, 0);
    const auto bits = qrng::stream_extract(geo, seed, std::span(&block, 1), opts);

    const std::uint64_t raw_bits = block.count() * static_cast<std::uint64_t>(config.adc.bits);
    const bool conserved = bits.size() == raw_bits / geo.n * geo.m;
    qrng::write_bitstream_file(out, bits, {{"n", geo.n}, {"m", geo.m}, {"k", geo.k}, {"raw_bits", raw_bits}});
    emit({{"file", out.string()},
          {"extractor", geo},
          {"raw_bits", raw_bits},
          {"extracted_bits", bits.size()},
          {"conserved", conserved}});
    return conserved ? exit_ok : exit_check_failed;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
    std::string input;
    std::string raw;
    std::size_t max_bits = 0;
};

int cmd_analyze(const GlobalArgs& g, const AnalyzeArgs& a) {
    const PipelineConfig config = load(g);
    auto bits = qrng::read_bitstream_file(a.input);
    if (a.max_bits != 0 && bits.size() > a.max_bits) {
        bits = bits.slice(0, a.max_bits);
    }
    qrng::AnalysisReport report;
    report.analyzed_bits = bits.size();
    report.tests = qrng::nist_subset(bits, config.alpha);
    report.extracted_autocorr = qrng::autocorrelation(bits, config.autocorr_lags);
    if (!a.raw.empty()) {
        const auto raw = qrng::read_raw_file(a.raw);
        report.raw_autocorr = qrng::autocorrelation(raw.samples, config.autocorr_lags);
        report.raw_psd = qrng::psd_welch(raw.samples, 1024, 512);
    }
    const bool ok = report.passed() && autocorr_ok(*report.extracted_autocorr);

    std::filesystem::create_directories(config.output_dir);
    qrng::write_json_file(config.output_dir / "analysis.json", report);
    qrng::write_autocorr_csv(config.output_dir / "autocorr_extracted.csv", *report.extracted_autocorr);
    if (report.raw_psd) {
        qrng::write_autocorr_csv(config.output_dir / "autocorr_raw.csv", *report.raw_autocorr);
        qrng::write_psd_csv(config.output_dir / "psd_raw.csv", *report.raw_psd);
    }
    json summary = json::array();
    for (const auto& t : report.tests) {
        summary.push_back({{"test", t.test_name}, {"p_value", t.p_value}, {"pass", t.pass}, {"skipped", t.skipped}});
    }
    emit({{"bits", bits.size()},
          {"tests", summary},
          {"autocorr_fraction_within_3sigma", report.extracted_autocorr->fraction_within(3.0)},
          {"passed", ok}});
    return ok ? exit_ok : exit_check_failed;
}

// --- run --------------------------------------------------------------------

int cmd_run(const GlobalArgs& g, bool analyze) {
    const PipelineConfig config = load(g);
    qrng::RunOptions opts;
    opts.analyze = analyze;
    const auto result = qrng::run_pipeline(config, opts);
    const auto conf_path = config.output_dir / "config.conf";
    {
        std::ofstream conf(conf_path);
        conf << qrng::format_config(config);
        if (!conf) {
            throw std::runtime_error("cannot write " + conf_path.string());
        }
    }
    bool ok = true;
    if (analyze) {
        ok = result.analysis.passed() && result.analysis.extracted_autocorr &&
             autocorr_ok(*result.analysis.extracted_autocorr);
    }
    json doc = summarize(result);
    doc["config_file"] = conf_path.string();
    doc["passed"] = ok;
    if (!g.quiet) {
        emit(doc);
    }
    return ok ? exit_ok : exit_check_failed;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
    double duration = 2.0;
    std::vector<unsigned> workers{1};
};

int cmd_bench(const GlobalArgs& g, const BenchArgs& a) {
    const PipelineConfig config = load(g);
    json runs = json::array();
    double first = 0.0;
    for (unsigned w : a.workers) {
        const auto t = qrng::bench_extractor(config, a.duration, w);
        if (runs.empty()) {
            first = t.extracted_bits_per_s;
        }
        json r = t;
        r["speedup_vs_first"] = first > 0.0 ? t.extracted_bits_per_s / first : 0.0;
        runs.push_back(r);
    }
    emit({{"hardware_threads", std::thread::hardware_concurrency()}, {"runs", runs}});
    return exit_ok;
}

// --- serve / sink -----------------------------------------------------------

struct ServeArgs {
    std::string listen = "127.0.0.1:9400";
    std::size_t payload = 64 * 1024;
    std::uint64_t frames = 0;
    double duration = 0.0;
    unsigned channels = 1;
    std::optional<std::uint64_t> corrupt;
    bool repeat = false;
};

int cmd_serve(const GlobalArgs& g, const ServeArgs& a) {
    const PipelineConfig config = load(g);
    const qrng::Endpoint base = qrng::parse_endpoint(a.listen);
    if (a.channels == 0 || (a.channels > 1 && base.port == 0)) {
        throw qrng::ConfigError("--channels needs >= 1 and, with several channels, a fixed base port");
    }
    std::mutex out_mu;
    std::vector<json> reports(a.channels);
    std::vector<std::exception_ptr> errors(a.channels);
    std::vector<std::jthread> threads;
    // Channel c listens on base port + c and uses its own seeds; channel 0 matches a
    // single-channel server exactly.
    for (unsigned c = 0; c < a.channels; ++c) {
        threads.emplace_back([&, c] {
            try {
                PipelineConfig ch = config;
                if (c > 0) {
                    ch.noise_seed = qrng::derive_seed(config.noise_seed, 0x4348414E, c);
                    ch.toeplitz_seed = qrng::derive_seed(config.toeplitz_seed, 0x4348414E, c);
                }
                qrng::ServeOptions o;
                o.listen = base;
                o.listen.port = static_cast<std::uint16_t>(base.port + c);
                o.payload_bytes = a.payload;
                o.max_frames = a.frames;
                o.duration_s = a.duration;
                o.corrupt_sequence = a.corrupt;
                o.repeat_buffer = a.repeat;
                o.on_listening = [&, c](std::uint16_t port) {
                    std::lock_guard lock(out_mu);
                    std::cerr << "channel " << c << " listening on " << o.listen.host << ':' << port << '\n';
                };
                const auto r = qrng::serve_stream(ch, o);
                reports[c] = {{"channel", c},
                              {"frames", r.frames},
                              {"payload_bytes", r.payload_bytes},
                              {"wall_seconds", r.wall_seconds},
                              {"mbps", r.mbps}};
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    threads.clear();
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    emit(reports);
    return exit_ok;
}

struct SinkArgs {
    std::string connect = "127.0.0.1:9400";
    double expected_mbps = 0.0;
    double timeout = 10.0;
    std::string out;
};

int cmd_sink(const GlobalArgs&, const SinkArgs& a) {
    qrng::SinkOptions o;
    o.connect = qrng::parse_endpoint(a.connect);
    o.expected_rate_mbps = a.expected_mbps;
    o.connect_timeout_s = a.timeout;
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out, std::ios::binary);
        if (!file) {
            throw std::runtime_error("cannot open " + a.out);
        }
        o.on_payload = [&](std::span<const std::uint8_t> p) {
            file.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size()));
        };
    }
    try {
        const auto r = qrng::sink_stream(o);
        emit({{"frames", r.frames},
              {"payload_bytes", r.payload_bytes},
              {"crc_errors", r.crc_errors},
              {"sequence_gaps", r.sequence_gaps},
              {"wall_seconds", r.wall_seconds},
              {"mean_mbps", r.mean_mbps},
              {"min_window_mbps", r.min_window_mbps},
              {"max_window_mbps", r.max_window_mbps},
              {"clean_end", r.clean_end},
              {"rate_ok", r.rate_ok},
              {"ok", r.ok()}});
        return r.ok() ? exit_ok : exit_check_failed;
    } catch (const qrng::StreamError& e) {
        std::cerr << "qrng sink: " << e.what() << '\n';
        emit({{"ok", false}, {"error", e.what()}, {"sequence", e.sequence()}});
        return exit_check_failed;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vacuum-noise QRNG pipeline: simulate, estimate, extract, analyze, stream"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("-c,--config", g.config_path, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("-s,--set", g.overrides, "Override a config key (key=value), repeatable");
    app.add_option("-o,--output-dir", g.output_dir, "Output directory (overrides output_dir)");
    app.add_flag("-q,--quiet", g.quiet, "Suppress the JSON summary where possible");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate digitized homodyne samples to a raw file");
    simulate->add_option("-n,--samples", sim.samples, "Sample count")->check(CLI::PositiveNumber);
    simulate->add_option("-p,--power", sim.power, "LO power in mW (overrides lo_power_mw)");
    simulate->add_option("-f,--file", sim.out, "Raw output path (default <output_dir>/raw.u16)");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Min-entropy estimate and extractor sizing, or an LO power sweep");
    estimate->add_option("-i,--input", est.input, "Raw sample file (default: simulate a held-out block)");
    estimate->add_flag("--sweep", est.sweep, "Sweep LO power and fit variance against power");
    estimate->add_option("-n,--samples", est.samples, "Samples per simulated block / sweep point");
    estimate->add_option("--power-step", est.power_step, "Sweep step in mW")->check(CLI::PositiveNumber);
    estimate->add_option("--power-max", est.power_max, "Sweep upper end in mW");

    ExtractArgs ext;
    auto* extract = app.add_subcommand("extract", "Toeplitz-hash a raw sample file into a bitstream file");
    extract->add_option("-i,--input", ext.input, "Raw sample file")->required();
    extract->add_option("--seed", ext.seed, "Seed file (default: derive from toeplitz_seed and save it)");
    extract->add_option("-f,--file", ext.out, "Bitstream output path (default <output_dir>/extracted.bin)");

    AnalyzeArgs ana;
    auto* analyze = app.add_subcommand("analyze", "Statistical tests and autocorrelation of a bitstream file");
    analyze->add_option("-i,--input", ana.input, "Bitstream file")->required();
    analyze->add_option("--raw", ana.raw, "Raw sample file for autocorrelation/PSD plots (reported only)");
    analyze->add_option("--max-bits", ana.max_bits, "Analyze at most this many leading bits");

    bool run_no_analyze = false;
    auto* run = app.add_subcommand("run", "End-to-end pipeline; writes output files and report.json");
    run->add_flag("--no-analyze", run_no_analyze, "Skip the statistical analysis");

    BenchArgs ben;
    auto* bench = app.add_subcommand("bench", "Sustained extraction throughput on in-memory data");
    bench->add_option("-d,--duration", ben.duration, "Seconds per measurement (>= 1)");
    bench->add_option("-w,--workers", ben.workers, "Worker counts to measure, e.g. -w 1 2 4");

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "Serve extracted bytes as framed TCP stream(s)");
    serve->add_option("-l,--listen", srv.listen, "host:port (port 0 picks a free one)");
    serve->add_option("--payload-bytes", srv.payload, "Payload bytes per frame");
    serve->add_option("--frames", srv.frames, "Stop after this many frames (0 = unlimited)");
    serve->add_option("-d,--duration", srv.duration, "Stop after this many seconds (0 = unlimited)");
    serve->add_option("--channels", srv.channels, "Independent channels on consecutive ports");
    serve->add_option("--corrupt-sequence", srv.corrupt, "Fault injection: flip a payload bit in this frame");
    serve->add_flag("--repeat-buffer", srv.repeat, "Replay one extracted buffer (transport-only rate)");

    SinkArgs snk;
    auto* sink = app.add_subcommand("sink", "Receive and verify a framed stream");
    sink->add_option("--connect", snk.connect, "host:port");
    sink->add_option("--expected-mbps", snk.expected_mbps, "Fail if any 1 s window falls below this rate");
    sink->add_option("--timeout", snk.timeout, "Connect timeout in seconds");
    sink->add_option("-f,--file", snk.out, "Write received payload bytes here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(g, sim);
        if (*estimate) return cmd_estimate(g, est);
        if (*extract) return cmd_extract(g, ext);
        if (*analyze) return cmd_analyze(g, ana);
        if (*run) return cmd_run(g, !run_no_analyze);
        if (*bench) return cmd_bench(g, ben);
        if (*serve) return cmd_serve(g, srv);
        if (*sink) return cmd_sink(g, snk);
    } catch (const qrng::ConfigError& e) {
        std::cerr << "qrng: config error: " << e.what() << '\n';
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "qrng: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
