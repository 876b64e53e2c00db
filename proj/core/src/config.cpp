#include "qrng/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qrng {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("config: " + std::string(key) + " = '" + std::string(value) + "' is not " +
                      std::string(expected));
}

double to_double(std::string_view key, std::string_view value) {
    const std::string text(value);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        bad_value(key, value, "a number");
    }
    if (used != text.size() || !std::isfinite(v)) {
        bad_value(key, value, "a number");
    }
    return v;
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec == std::errc() && ptr == value.data() + value.size()) {
        return v;
    }
    // Accept scientific notation for exact integers, e.g. raw_bits = 1e8.
    const double d = to_double(key, value);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
        bad_value(key, value, "a non-negative integer");
    }
    return static_cast<std::uint64_t>(d);
}

bool to_bool(std::string_view key, std::string_view value) {
    const auto v = lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    bad_value(key, value, "a boolean");
}

bool is_none(std::string_view value) {
    const auto v = lower(value);
    return v == "none" || v == "off" || v.empty();
}

}  // namespace

void PipelineConfig::validate() const {
    try {
        noise.validate();
        adc.validate();
        if (band) {
            band->validate();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (extractor.n < 1 || extractor.k < 1 || extractor.n % extractor.k != 0) {
        throw ConfigError("config: k must divide n (n = " + std::to_string(extractor.n) +
                          ", k = " + std::to_string(extractor.k) + ")");
    }
    if (!target_ratio && m_explicit && (extractor.m < 1 || extractor.m >= extractor.n)) {
        throw ConfigError("config: m must satisfy 1 <= m < n");
    }
    if (target_ratio && !(*target_ratio > 0.0 && *target_ratio < 1.0)) {
        throw ConfigError("config: target_ratio must be in (0, 1)");
    }
    if (!(safety_factor > 0.0 && safety_factor <= 1.0)) {
        throw ConfigError("config: safety_factor must be in (0, 1]");
    }
    if (workers < 1) {
        throw ConfigError("config: workers must be >= 1");
    }
    if (chunk_blocks < 1) {
        throw ConfigError("config: chunk_blocks must be >= 1");
    }
    if (!(held_out_fraction > 0.0 && held_out_fraction <= 1.0)) {
        throw ConfigError("config: held_out_fraction must be in (0, 1]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("config: alpha must be in (0, 1)");
    }
    if (!(sample_rate_hz > 0.0)) {
        throw ConfigError("config: sample_rate_hz must be positive");
    }
}

void apply_setting(PipelineConfig& c, std::string_view raw_key, std::string_view raw_value) {
    const std::string key = lower(trim(raw_key));
    const std::string_view value = trim(raw_value);

    if (key == "noise_seed") {
        c.noise_seed = to_uint(key, value);
    } else if (key == "toeplitz_seed") {
        c.toeplitz_seed = to_uint(key, value);
    } else if (key == "quantum_slope") {
        c.noise.quantum_slope = to_double(key, value);
    } else if (key == "classical_variance") {
        c.noise.classical_variance = to_double(key, value);
    } else if (key == "lo_power_mw") {
        c.noise.lo_power_mw = to_double(key, value);
    } else if (key == "mean_code") {
        c.noise.mean_code = to_double(key, value);
    } else if (key == "adc_bits") {
        c.adc.bits = static_cast<int>(to_uint(key, value));
    } else if (key == "full_scale_min") {
        c.adc.full_scale_min = to_double(key, value);
    } else if (key == "full_scale_max") {
        c.adc.full_scale_max = to_double(key, value);
    } else if (key == "band_low" || key == "band_high") {
        if (is_none(value)) {
            c.band.reset();
        } else {
            if (!c.band) {
                c.band = BandShape{};
            }
            (key == "band_low" ? c.band->low_cut_fraction : c.band->high_cut_fraction) = to_double(key, value);
        }
    } else if (key == "n") {
        c.extractor.n = to_uint(key, value);
    } else if (key == "m") {
        if (is_none(value)) {
            c.m_explicit = false;
        } else {
            c.extractor.m = to_uint(key, value);
            c.m_explicit = true;
        }
    } else if (key == "k") {
        c.extractor.k = to_uint(key, value);
    } else if (key == "target_ratio") {
        if (is_none(value)) {
            c.target_ratio.reset();
        } else {
            c.target_ratio = to_double(key, value);
        }
    } else if (key == "safety_factor") {
        c.safety_factor = to_double(key, value);
    } else if (key == "sample_rate_hz") {
        c.sample_rate_hz = to_double(key, value);
    } else if (key == "fresh_seed_per_block") {
        c.fresh_seed_per_block = to_bool(key, value);
    } else if (key == "raw_bits") {
        c.raw_bits = to_uint(key, value);
    } else if (key == "chunk_blocks") {
        c.chunk_blocks = to_uint(key, value);
    } else if (key == "workers") {
        c.workers = static_cast<unsigned>(to_uint(key, value));
    } else if (key == "held_out_fraction") {
        c.held_out_fraction = to_double(key, value);
    } else if (key == "min_held_out_samples") {
        c.min_held_out_samples = to_uint(key, value);
    } else if (key == "analysis_bits") {
        c.analysis_bits = to_uint(key, value);
    } else if (key == "autocorr_lags") {
        c.autocorr_lags = to_uint(key, value);
    } else if (key == "alpha") {
        c.alpha = to_double(key, value);
    } else if (key == "output_dir") {
        c.output_dir = std::string(value);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig config;
    bool have_noise_seed = false;
    bool have_toeplitz_seed = false;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = lower(trim(line.substr(0, eq)));
        apply_setting(config, key, line.substr(eq + 1));
        have_noise_seed |= key == "noise_seed";
        have_toeplitz_seed |= key == "toeplitz_seed";
    }
    if (!have_noise_seed || !have_toeplitz_seed) {
        throw ConfigError("config: noise_seed and toeplitz_seed are mandatory");
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "# qrng pipeline configuration\n"
        << "noise_seed = " << c.noise_seed << '\n'
        << "toeplitz_seed = " << c.toeplitz_seed << '\n'
        << "\n# noise model (synthetic; code^2 units)\n"
        << "quantum_slope = " << c.noise.quantum_slope << '\n'
        << "classical_variance = " << c.noise.classical_variance << '\n'
        << "lo_power_mw = " << c.noise.lo_power_mw << '\n'
        << "mean_code = " << c.noise.mean_code << '\n'
        << "adc_bits = " << c.adc.bits << '\n'
        << "full_scale_min = " << c.adc.full_scale_min << '\n'
        << "full_scale_max = " << c.adc.full_scale_max << '\n';
    if (c.band) {
        out << "band_low = " << c.band->low_cut_fraction << '\n' << "band_high = " << c.band->high_cut_fraction << '\n';
    } else {
        out << "band_low = none\n";
    }
    out << "\n# extractor\n"
        << "n = " << c.extractor.n << '\n'
        << "k = " << c.extractor.k << '\n';
    if (c.m_explicit) {
        out << "m = " << c.extractor.m << '\n';
    } else {
        out << "m = none\n";
    }
    if (c.target_ratio) {
        out << "target_ratio = " << *c.target_ratio << '\n';
    } else {
        out << "target_ratio = none\n";
    }
    out << "safety_factor = " << c.safety_factor << '\n'
        << "fresh_seed_per_block = " << (c.fresh_seed_per_block ? "true" : "false") << '\n'
        << "\n# run\n"
        << "sample_rate_hz = " << c.sample_rate_hz << '\n'
        << "raw_bits = " << c.raw_bits << '\n'
        << "chunk_blocks = " << c.chunk_blocks << '\n'
        << "workers = " << c.workers << '\n'
        << "held_out_fraction = " << c.held_out_fraction << '\n'
        << "min_held_out_samples = " << c.min_held_out_samples << '\n'
        << "analysis_bits = " << c.analysis_bits << '\n'
        << "autocorr_lags = " << c.autocorr_lags << '\n'
        << "alpha = " << c.alpha << '\n'
        << "output_dir = " << c.output_dir.string() << '\n';
    return out.str();
}

}  // namespace qrng
