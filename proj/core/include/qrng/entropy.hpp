#pragma once

#include "qrng/noise_model.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qrng {

/// Code-indexed counts; counts.size() == 2^bits.
struct Histogram {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    static Histogram for_adc(const AdcConfig& adc) { return Histogram{std::vector<std::uint64_t>(adc.code_count(), 0), 0}; }

    void add(std::uint16_t code) {
        ++counts.at(code);
        ++total;
    }
};

enum class EntropyMethod { empirical, analytic_gaussian };

std::string_view to_string(EntropyMethod method) noexcept;

struct EntropyReport {
    double min_entropy_bits_per_sample = 0.0;
    double p_max = 1.0;
    EntropyMethod method = EntropyMethod::empirical;
    std::uint64_t sample_count = 0;
};

struct VarianceFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// H_inf = -log2(max(counts) / total). Throws on an empty histogram.
EntropyReport min_entropy_empirical(const Histogram& h);

/// Probability mass of each ADC code for a Gaussian of the given mean and standard
/// deviation (code units), including the saturated mass in codes 0 and 2^bits - 1.
std::vector<double> gaussian_code_masses(double sigma_codes, const AdcConfig& adc, double mean_code);

/// H_inf of a quantized Gaussian, from the largest code mass.
EntropyReport min_entropy_gaussian(double sigma_codes, const AdcConfig& adc, double mean_code);

/// Solves min_entropy_gaussian(sigma) == target_bits for sigma by bisection.
/// Only meaningful while the centre bin dominates (target well below `bits`).
double sigma_for_min_entropy(double target_bits, const AdcConfig& adc, double mean_code);

/// Ordinary least squares over (power, variance). Throws with fewer than two points
/// or when every power is identical.
VarianceFit fit_variance_line(std::span<const SweepPoint> points);

/// floor(n_bits * (min_entropy_bits / bits_per_sample) * safety_factor).
std::size_t recommend_output_length(double min_entropy_bits, std::size_t n_bits, int bits_per_sample,
                                    double safety_factor = 0.977);

}  // namespace qrng
