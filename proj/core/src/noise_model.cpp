#include "qrng/noise_model.hpp"

#include "qrng/fft.hpp"
#include "qrng/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrng {

void AdcConfig::validate() const {
    if (bits < 1 || bits > 16) {
        throw std::invalid_argument("AdcConfig: bits must be in [1, 16], got " + std::to_string(bits));
    }
    if (!(full_scale_min < full_scale_max)) {
        throw std::invalid_argument("AdcConfig: full_scale_min must be below full_scale_max");
    }
}

void NoiseModelParams::validate() const {
    if (!(quantum_slope >= 0.0) || !(classical_variance >= 0.0) || !(lo_power_mw >= 0.0)) {
        throw std::invalid_argument("NoiseModelParams: slope, classical variance and LO power must be >= 0");
    }
    if (!std::isfinite(mean_code) || !std::isfinite(total_variance())) {
        throw std::invalid_argument("NoiseModelParams: non-finite parameter");
    }
}

void BandShape::validate() const {
    if (!(low_cut_fraction >= 0.0 && low_cut_fraction < high_cut_fraction && high_cut_fraction <= 0.5)) {
        throw std::invalid_argument("BandShape: need 0 <= low_cut < high_cut <= 0.5");
    }
}

void RawSampleBlock::validate() const {
    adc.validate();
    const std::uint32_t top = adc.max_code();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] > top) {
            throw std::invalid_argument("RawSampleBlock: sample " + std::to_string(i) + " = " +
                                        std::to_string(samples[i]) + " exceeds ADC range");
        }
    }
}

std::uint16_t quantize(double value, const AdcConfig& adc) noexcept {
    const double top = static_cast<double>(adc.max_code());
    const double scaled = std::floor((value - adc.full_scale_min) * adc.scale() + 0.5);
    if (!(scaled > 0.0)) {  // also catches NaN
        return 0;
    }
    if (scaled >= top) {
        return static_cast<std::uint16_t>(adc.max_code());
    }
    return static_cast<std::uint16_t>(scaled);
}

namespace {

// Zeroes spectral content outside the pass band and rescales so the expected
// variance of the result equals the variance of the white input.
void apply_band(std::vector<double>& noise, const BandShape& band) {
    const std::size_t n = noise.size();
    if (n < 2) {
        return;
    }
    auto spectrum = fft::forward_real(noise);
    std::size_t kept_two_sided = 0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(n);
        if (f >= band.low_cut_fraction && f <= band.high_cut_fraction) {
            const bool self_conjugate = (k == 0) || (2 * k == n);
            kept_two_sided += self_conjugate ? 1 : 2;
        } else {
            spectrum[k] = 0.0;
        }
    }
    if (kept_two_sided == 0) {
        throw std::invalid_argument("BandShape: pass band contains no frequency bin for this block length");
    }
    noise = fft::inverse_real(spectrum, n);
    const double gain = std::sqrt(static_cast<double>(n) / static_cast<double>(kept_two_sided));
    for (double& v : noise) {
        v *= gain;
    }
}

}  // namespace

RawSampleBlock simulate_block(const NoiseModelParams& params, const AdcConfig& adc, std::size_t count,
                              std::uint64_t prng_seed, const std::optional<BandShape>& band) {
    if (count == 0) {
        throw std::invalid_argument("simulate_block: count must be >= 1");
    }
    params.validate();
    adc.validate();
    if (band) {
        band->validate();
    }

    const double sigma = std::sqrt(params.total_variance());
    RawSampleBlock block;
    block.adc = adc;
    block.samples.resize(count);

    // Noise is generated in code units, then mapped back to analog so quantize()
    // applies the ADC's own scaling.
    const double code_to_analog = 1.0 / adc.scale();
    GaussianSampler gauss(prng_seed);

    if (!band) {
        for (auto& s : block.samples) {
            const double code = params.mean_code + sigma * gauss();
            s = quantize(adc.full_scale_min + code * code_to_analog, adc);
        }
        return block;
    }

    std::vector<double> noise(count);
    for (double& v : noise) {
        v = gauss();
    }
    apply_band(noise, *band);
    for (std::size_t i = 0; i < count; ++i) {
        const double code = params.mean_code + sigma * noise[i];
        block.samples[i] = quantize(adc.full_scale_min + code * code_to_analog, adc);
    }
    return block;
}

std::vector<SweepPoint> sweep_lo_power(const NoiseModelParams& params_base, std::span<const double> powers,
                                       const AdcConfig& adc, std::size_t count, std::uint64_t prng_seed) {
    if (powers.empty()) {
        throw std::invalid_argument("sweep_lo_power: powers list is empty");
    }
    std::vector<SweepPoint> out;
    out.reserve(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (!(powers[i] >= 0.0)) {
            throw std::invalid_argument("sweep_lo_power: LO power must be >= 0");
        }
        NoiseModelParams p = params_base;
        p.lo_power_mw = powers[i];
        const auto block = simulate_block(p, adc, count, derive_seed(prng_seed, 0x5357454550ULL, i));
        out.push_back({powers[i], sample_moments(block.samples).variance});
    }
    return out;
}

SampleMoments sample_moments(std::span<const std::uint16_t> samples) noexcept {
    if (samples.empty()) {
        return {};
    }
    // Integer accumulation is exact for any realistic block size.
    std::uint64_t sum = 0;
    long double sum_sq = 0.0L;
    for (std::uint16_t s : samples) {
        sum += s;
    }
    const long double n = static_cast<long double>(samples.size());
    const long double mean = static_cast<long double>(sum) / n;
    for (std::uint16_t s : samples) {
        const long double d = static_cast<long double>(s) - mean;
        sum_sq += d * d;
    }
    return {static_cast<double>(mean), static_cast<double>(sum_sq / n)};
}

}  // namespace qrng
