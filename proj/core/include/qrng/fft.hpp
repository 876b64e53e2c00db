#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qrng::fft {

/// Real-to-complex DFT, unnormalized. Returns the n/2 + 1 non-negative-frequency bins.
std::vector<std::complex<double>> forward_real(std::span<const double> input);

/// Inverse of forward_real for a length-`n` signal, scaled by 1/n so that
/// inverse_real(forward_real(x), x.size()) == x up to rounding.
std::vector<double> inverse_real(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace qrng::fft
