#include "qrng/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qrng {

std::string_view to_string(EntropyMethod method) noexcept {
    switch (method) {
        case EntropyMethod::empirical:
            return "empirical";
        case EntropyMethod::analytic_gaussian:
            return "analytic_gaussian";
    }
    return "unknown";
}

EntropyReport min_entropy_empirical(const Histogram& h) {
    if (h.total == 0 || h.counts.empty()) {
        throw std::invalid_argument("min_entropy_empirical: empty histogram");
    }
    const std::uint64_t peak = *std::max_element(h.counts.begin(), h.counts.end());
    const double p_max = static_cast<double>(peak) / static_cast<double>(h.total);
    return {-std::log2(p_max), p_max, EntropyMethod::empirical, h.total};
}

namespace {

// P(a <= X < b) for X ~ N(mean, sigma), computed on the tail side to avoid cancellation.
double normal_interval_mass(double a, double b, double mean, double sigma) {
    const double za = (a - mean) / (sigma * std::numbers::sqrt2);
    const double zb = (b - mean) / (sigma * std::numbers::sqrt2);
    if (za >= 0.0) {
        return 0.5 * (std::erfc(za) - std::erfc(zb));
    }
    if (zb <= 0.0) {
        return 0.5 * (std::erfc(-zb) - std::erfc(-za));
    }
    return 1.0 - 0.5 * std::erfc(-za) - 0.5 * std::erfc(zb);
}

}  // namespace

std::vector<double> gaussian_code_masses(double sigma_codes, const AdcConfig& adc, double mean_code) {
    adc.validate();
    if (!(sigma_codes >= 0.0)) {
        throw std::invalid_argument("gaussian_code_masses: sigma must be >= 0");
    }
    const std::size_t codes = adc.code_count();
    std::vector<double> masses(codes, 0.0);
    if (sigma_codes == 0.0) {
        const double rounded = std::floor(mean_code + 0.5);
        const double top = static_cast<double>(adc.max_code());
        masses[static_cast<std::size_t>(std::clamp(rounded, 0.0, top))] = 1.0;
        return masses;
    }
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < codes; ++c) {
        const double lo = (c == 0) ? -inf : static_cast<double>(c) - 0.5;
        const double hi = (c + 1 == codes) ? inf : static_cast<double>(c) + 0.5;
        masses[c] = normal_interval_mass(lo, hi, mean_code, sigma_codes);
    }
    return masses;
}

EntropyReport min_entropy_gaussian(double sigma_codes, const AdcConfig& adc, double mean_code) {
    const auto masses = gaussian_code_masses(sigma_codes, adc, mean_code);
    const double p_max = *std::max_element(masses.begin(), masses.end());
    return {-std::log2(p_max), p_max, EntropyMethod::analytic_gaussian, 0};
}

double sigma_for_min_entropy(double target_bits, const AdcConfig& adc, double mean_code) {
    if (!(target_bits > 0.0) || target_bits >= adc.bits) {
        throw std::invalid_argument("sigma_for_min_entropy: target must be in (0, bits)");
    }
    auto entropy_at = [&](double sigma) { return min_entropy_gaussian(sigma, adc, mean_code).min_entropy_bits_per_sample; };

    double lo = 0.0;
    double hi = 1.0;
    const double hi_limit = static_cast<double>(adc.code_count());
    while (entropy_at(hi) < target_bits) {
        lo = hi;
        hi *= 2.0;
        if (hi > hi_limit) {
            throw std::invalid_argument("sigma_for_min_entropy: target not reachable before the ADC saturates");
        }
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (entropy_at(mid) < target_bits ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

VarianceFit fit_variance_line(std::span<const SweepPoint> points) {
    if (points.size() < 2) {
        throw std::invalid_argument("fit_variance_line: need at least two points");
    }
    const double count = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& p : points) {
        mean_x += p.power_mw;
        mean_y += p.variance;
    }
    mean_x /= count;
    mean_y /= count;

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.power_mw - mean_x;
        const double dy = p.variance - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_variance_line: all powers identical");
    }

    VarianceFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.variance - (fit.intercept + fit.slope * p.power_mw);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

std::size_t recommend_output_length(double min_entropy_bits, std::size_t n_bits, int bits_per_sample,
                                    double safety_factor) {
    if (bits_per_sample < 1) {
        throw std::invalid_argument("recommend_output_length: bits_per_sample must be >= 1");
    }
    if (!(min_entropy_bits >= 0.0) || min_entropy_bits > bits_per_sample) {
        throw std::invalid_argument("recommend_output_length: min-entropy must lie in [0, bits_per_sample]");
    }
    if (!(safety_factor > 0.0 && safety_factor <= 1.0)) {
        throw std::invalid_argument("recommend_output_length: safety_factor must be in (0, 1]");
    }
    // The epsilon keeps exact products such as 1000 * 0.753 from flooring one short.
    const double m = static_cast<double>(n_bits) * (min_entropy_bits / bits_per_sample) * safety_factor;
    return std::min(n_bits, static_cast<std::size_t>(std::floor(m + 1e-9)));
}

}  // namespace qrng
