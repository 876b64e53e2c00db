#pragma once

#include "qrng/analysis.hpp"
#include "qrng/entropy.hpp"
#include "qrng/noise_model.hpp"
#include "qrng/toeplitz.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>

namespace qrng {

// JSON encodings used by the run report and the sidecar descriptors. Field names of
// EntropyReport ("min_entropy_bits", "p_max") and VarianceFit ("slope", "intercept",
// "r2") are fixed.

void to_json(nlohmann::json& j, const AdcConfig& adc);
void from_json(const nlohmann::json& j, AdcConfig& adc);
void to_json(nlohmann::json& j, const NoiseModelParams& p);
void from_json(const nlohmann::json& j, NoiseModelParams& p);
void to_json(nlohmann::json& j, const BandShape& b);
void from_json(const nlohmann::json& j, BandShape& b);
void to_json(nlohmann::json& j, const ExtractorConfig& c);
void to_json(nlohmann::json& j, const EntropyReport& r);
void to_json(nlohmann::json& j, const VarianceFit& f);
void to_json(nlohmann::json& j, const SweepPoint& p);
void to_json(nlohmann::json& j, const TestResult& t);
void to_json(nlohmann::json& j, const AutocorrResult& a);
void to_json(nlohmann::json& j, const PsdResult& p);

/// Raw and extracted-data validation results, as written to report.json.
struct AnalysisReport {
    std::vector<TestResult> tests;
    std::optional<AutocorrResult> raw_autocorr;
    std::optional<AutocorrResult> extracted_autocorr;
    std::optional<PsdResult> raw_psd;
    std::size_t analyzed_bits = 0;

    bool passed() const noexcept { return all_passed(tests); }
};
void to_json(nlohmann::json& j, const AnalysisReport& r);

/// "lag,rho" lines.
void write_autocorr_csv(std::ostream& out, const AutocorrResult& a);
void write_autocorr_csv(const std::filesystem::path& path, const AutocorrResult& a);
/// "frequency,power" lines.
void write_psd_csv(std::ostream& out, const PsdResult& p);
void write_psd_csv(const std::filesystem::path& path, const PsdResult& p);

}  // namespace qrng
