#include "qrng/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace qrng {

using nlohmann::json;

void to_json(json& j, const AdcConfig& adc) {
    j = json{{"bits", adc.bits}, {"full_scale_min", adc.full_scale_min}, {"full_scale_max", adc.full_scale_max}};
}

void from_json(const json& j, AdcConfig& adc) {
    adc.bits = j.at("bits").get<int>();
    adc.full_scale_min = j.value("full_scale_min", 0.0);
    adc.full_scale_max = j.value("full_scale_max", static_cast<double>((1 << adc.bits) - 1));
}

void to_json(json& j, const NoiseModelParams& p) {
    j = json{{"quantum_slope", p.quantum_slope},
             {"classical_variance", p.classical_variance},
             {"lo_power_mw", p.lo_power_mw},
             {"mean_code", p.mean_code},
             {"quantum_variance", p.quantum_variance()},
             {"total_variance", p.total_variance()}};
}

void from_json(const json& j, NoiseModelParams& p) {
    p.quantum_slope = j.at("quantum_slope").get<double>();
    p.classical_variance = j.at("classical_variance").get<double>();
    p.lo_power_mw = j.at("lo_power_mw").get<double>();
    p.mean_code = j.value("mean_code", 512.0);
}

void to_json(json& j, const BandShape& b) {
    j = json{{"low_cut_fraction", b.low_cut_fraction}, {"high_cut_fraction", b.high_cut_fraction}};
}

void from_json(const json& j, BandShape& b) {
    b.low_cut_fraction = j.at("low_cut_fraction").get<double>();
    b.high_cut_fraction = j.at("high_cut_fraction").get<double>();
}

void to_json(json& j, const ExtractorConfig& c) {
    j = json{{"n", c.n}, {"m", c.m}, {"k", c.k}, {"ratio", c.ratio()}};
}

void to_json(json& j, const EntropyReport& r) {
    j = json{{"min_entropy_bits", r.min_entropy_bits_per_sample},
             {"p_max", r.p_max},
             {"method", std::string(to_string(r.method))},
             {"sample_count", r.sample_count}};
}

void to_json(json& j, const VarianceFit& f) {
    j = json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r_squared}};
}

void to_json(json& j, const SweepPoint& p) { j = json{{"power_mw", p.power_mw}, {"variance", p.variance}}; }

void to_json(json& j, const TestResult& t) {
    j = json{{"name", t.test_name},
             {"p", t.skipped ? json(nullptr) : json(t.p_value)},
             {"pass", t.pass},
             {"skipped", t.skipped},
             {"statistic", t.statistic},
             {"alpha", t.alpha}};
    if (!t.note.empty()) {
        j["note"] = t.note;
    }
}

void to_json(json& j, const AutocorrResult& a) {
    j = json{{"coefficients", a.coefficients},
             {"sample_count", a.sample_count},
             {"confidence_bound", a.confidence_bound},
             {"fraction_within_3sigma", a.fraction_within(3.0)}};
}

void to_json(json& j, const PsdResult& p) {
    j = json{{"frequencies", p.frequencies},
             {"power", p.power},
             {"segment_length", p.segment_length},
             {"overlap", p.overlap},
             {"segments", p.segments}};
}

void to_json(json& j, const AnalysisReport& r) {
    j = json{{"tests", r.tests}, {"analyzed_bits", r.analyzed_bits}, {"all_passed", r.passed()}};
    if (r.raw_autocorr) {
        j["raw_autocorrelation"] = *r.raw_autocorr;
    }
    if (r.extracted_autocorr) {
        j["extracted_autocorrelation"] = *r.extracted_autocorr;
    }
    if (r.raw_psd) {
        j["raw_psd"] = *r.raw_psd;
    }
}

void write_autocorr_csv(std::ostream& out, const AutocorrResult& a) {
    out << "lag,rho\n" << std::setprecision(10);
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
        out << (i + 1) << ',' << a.coefficients[i] << '\n';
    }
}

void write_psd_csv(std::ostream& out, const PsdResult& p) {
    out << "frequency,power\n" << std::setprecision(10);
    for (std::size_t i = 0; i < p.power.size(); ++i) {
        out << p.frequencies[i] << ',' << p.power[i] << '\n';
    }
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

}  // namespace

void write_autocorr_csv(const std::filesystem::path& path, const AutocorrResult& a) {
    auto out = open_for_write(path);
    write_autocorr_csv(out, a);
}

void write_psd_csv(const std::filesystem::path& path, const PsdResult& p) {
    auto out = open_for_write(path);
    write_psd_csv(out, p);
}

}  // namespace qrng
