#pragma once

#include "qrng/bitstream.hpp"
#include "qrng/entropy.hpp"
#include "qrng/noise_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qrng {

/// 3-sigma two-sided bound on a null autocorrelation coefficient is this over sqrt(N).
inline constexpr double autocorr_bound_constant = 4.89;

struct AutocorrResult {
    std::vector<double> coefficients;  // coefficients[k - 1] is lag k
    std::size_t sample_count = 0;
    double confidence_bound = 0.0;

    /// Fraction of lags with |rho| <= bound_sigmas * sigma, where sigma = 1/sqrt(N).
    double fraction_within(double bound_sigmas) const noexcept;
};

/// Biased estimator: rho(k) = sum (x_t - mean)(x_{t+k} - mean) / sum (x_t - mean)^2, for k = 1..max_lag.
/// Throws on zero variance or when fewer than max_lag + 2 samples are given.
AutocorrResult autocorrelation(std::span<const double> samples, std::size_t max_lag);
AutocorrResult autocorrelation(std::span<const std::uint16_t> samples, std::size_t max_lag);
AutocorrResult autocorrelation(const BitStream& bits, std::size_t max_lag);

enum class Window { rectangular, hann };

struct PsdResult {
    std::vector<double> frequencies;  // fraction of the sample rate, 0 .. 0.5
    std::vector<double> power;        // code^2 per bin, two-sided normalization
    std::size_t segment_length = 0;
    std::size_t overlap = 0;
    std::size_t segments = 0;

    /// Sum over the full two-sided spectrum divided by the segment length; equals the
    /// mean-square of the (demeaned) signal for a rectangular window.
    double total_power() const noexcept;
};

/// Welch averaged periodogram. The global mean is removed first; each segment is
/// windowed and normalized by the window's mean square so that a flat spectrum
/// reads its variance in every bin.
PsdResult psd_welch(std::span<const double> samples, std::size_t segment_length, std::size_t overlap,
                    Window window = Window::hann);
PsdResult psd_welch(std::span<const std::uint16_t> samples, std::size_t segment_length, std::size_t overlap,
                    Window window = Window::hann);

/// Code histogram. Throws on an empty block.
Histogram histogram(const RawSampleBlock& block);

struct TestResult {
    std::string test_name;
    double p_value = 0.0;
    bool pass = false;
    bool skipped = false;
    double statistic = 0.0;
    double alpha = 0.01;
    std::string note;

    bool failed() const noexcept { return !skipped && !pass; }
};

namespace nist {

inline constexpr double default_alpha = 0.01;

// Individual tests. Each returns a skipped result when the sequence is shorter than the
// test's minimum length.
TestResult frequency(const BitStream& bits, double alpha = default_alpha);
TestResult block_frequency(const BitStream& bits, std::size_t block_length = 128, double alpha = default_alpha);
TestResult runs(const BitStream& bits, double alpha = default_alpha);
TestResult longest_run_of_ones(const BitStream& bits, double alpha = default_alpha);
TestResult cumulative_sums(const BitStream& bits, bool forward, double alpha = default_alpha);
/// Two results: the first and second differences of psi^2.
std::vector<TestResult> serial(const BitStream& bits, unsigned pattern_length = 16, double alpha = default_alpha);
TestResult approximate_entropy(const BitStream& bits, unsigned pattern_length = 10, double alpha = default_alpha);
TestResult dft_spectral(const BitStream& bits, double alpha = default_alpha);

}  // namespace nist

/// The eight-test battery: frequency, block frequency (M = 128), runs, longest run of
/// ones, cumulative sums (forward and backward), serial (m = 16), approximate entropy
/// (m = 10) and DFT spectral. Cumulative sums and serial contribute two p-values each,
/// so ten results come back.
std::vector<TestResult> nist_subset(const BitStream& bits, double alpha = nist::default_alpha);

bool all_passed(std::span<const TestResult> results) noexcept;

}  // namespace qrng
