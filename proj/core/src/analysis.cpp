#include "qrng/analysis.hpp"

#include "qrng/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qrng {

double AutocorrResult::fraction_within(double bound_sigmas) const noexcept {
    if (coefficients.empty() || sample_count == 0) {
        return 0.0;
    }
    const double bound = bound_sigmas / std::sqrt(static_cast<double>(sample_count));
    const auto inside = std::count_if(coefficients.begin(), coefficients.end(),
                                      [bound](double r) { return std::abs(r) <= bound; });
    return static_cast<double>(inside) / static_cast<double>(coefficients.size());
}

AutocorrResult autocorrelation(std::span<const double> samples, std::size_t max_lag) {
    const std::size_t n = samples.size();
    if (max_lag < 1 || n < max_lag + 2) {
        throw std::invalid_argument("autocorrelation: need at least max_lag + 2 samples (max_lag = " +
                                    std::to_string(max_lag) + ", samples = " + std::to_string(n) + ")");
    }
    double mean = 0.0;
    for (double v : samples) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    double denom = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = samples[t] - mean;
        denom += centered[t] * centered[t];
    }
    if (!(denom > 0.0)) {
        throw std::invalid_argument("autocorrelation: sequence has zero variance");
    }

    AutocorrResult result;
    result.sample_count = n;
    result.confidence_bound = autocorr_bound_constant / std::sqrt(static_cast<double>(n));
    result.coefficients.resize(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        const double* a = centered.data();
        const double* b = centered.data() + lag;
        const std::size_t len = n - lag;
        for (std::size_t t = 0; t < len; ++t) {
            acc += a[t] * b[t];
        }
        result.coefficients[lag - 1] = acc / denom;
    }
    return result;
}

AutocorrResult autocorrelation(std::span<const std::uint16_t> samples, std::size_t max_lag) {
    std::vector<double> values(samples.begin(), samples.end());
    return autocorrelation(std::span<const double>(values), max_lag);
}

AutocorrResult autocorrelation(const BitStream& bits, std::size_t max_lag) {
    std::vector<double> values(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        values[i] = bits.get(i) ? 1.0 : 0.0;
    }
    return autocorrelation(std::span<const double>(values), max_lag);
}

double PsdResult::total_power() const noexcept {
    if (power.empty() || segment_length == 0) {
        return 0.0;
    }
    double sum = power.front();
    const std::size_t last = power.size() - 1;
    for (std::size_t k = 1; k < last; ++k) {
        sum += 2.0 * power[k];
    }
    // For even segment lengths the last bin is the self-conjugate Nyquist bin.
    sum += (segment_length % 2 == 0 ? 1.0 : 2.0) * power[last];
    return sum / static_cast<double>(segment_length);
}

PsdResult psd_welch(std::span<const double> samples, std::size_t segment_length, std::size_t overlap,
                    Window window) {
    if (segment_length < 2 || !std::has_single_bit(segment_length)) {
        throw std::invalid_argument("psd_welch: segment_length must be a power of two >= 2");
    }
    if (overlap >= segment_length) {
        throw std::invalid_argument("psd_welch: overlap must be smaller than segment_length");
    }
    if (samples.size() < segment_length) {
        throw std::invalid_argument("psd_welch: fewer samples than one segment");
    }

    const std::size_t len = segment_length;
    std::vector<double> taper(len, 1.0);
    if (window == Window::hann) {
        // Periodic Hann, the usual choice for spectral averaging.
        for (std::size_t t = 0; t < len; ++t) {
            taper[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(len));
        }
    }
    double window_power = 0.0;
    for (double w : taper) {
        window_power += w * w;
    }
    window_power /= static_cast<double>(len);

    double mean = 0.0;
    for (double v : samples) {
        mean += v;
    }
    mean /= static_cast<double>(samples.size());

    PsdResult result;
    result.segment_length = len;
    result.overlap = overlap;
    result.power.assign(len / 2 + 1, 0.0);
    result.frequencies.resize(len / 2 + 1);
    for (std::size_t k = 0; k < result.frequencies.size(); ++k) {
        result.frequencies[k] = static_cast<double>(k) / static_cast<double>(len);
    }

    const std::size_t step = len - overlap;
    std::vector<double> segment(len);
    const double norm = 1.0 / (static_cast<double>(len) * window_power);
    for (std::size_t start = 0; start + len <= samples.size(); start += step) {
        for (std::size_t t = 0; t < len; ++t) {
            segment[t] = (samples[start + t] - mean) * taper[t];
        }
        const auto spectrum = fft::forward_real(segment);
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
            result.power[k] += std::norm(spectrum[k]) * norm;
        }
        ++result.segments;
    }
    for (double& p : result.power) {
        p /= static_cast<double>(result.segments);
    }
    return result;
}

PsdResult psd_welch(std::span<const std::uint16_t> samples, std::size_t segment_length, std::size_t overlap,
                    Window window) {
    std::vector<double> values(samples.begin(), samples.end());
    return psd_welch(std::span<const double>(values), segment_length, overlap, window);
}

Histogram histogram(const RawSampleBlock& block) {
    if (block.samples.empty()) {
        throw std::invalid_argument("histogram: empty block");
    }
    auto h = Histogram::for_adc(block.adc);
    for (std::uint16_t s : block.samples) {
        if (s >= h.counts.size()) {
            throw std::invalid_argument("histogram: sample " + std::to_string(s) + " outside ADC range");
        }
        ++h.counts[s];
    }
    h.total = block.samples.size();
    return h;
}

bool all_passed(std::span<const TestResult> results) noexcept {
    return !results.empty() &&
           std::all_of(results.begin(), results.end(), [](const TestResult& r) { return r.pass && !r.skipped; });
}

}  // namespace qrng
