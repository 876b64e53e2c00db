#pragma once

// Independent reference computations used as test oracles. None of these call into
// the library under test; they work on plain vectors and are written for clarity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

using Bits = std::vector<std::uint8_t>;

/// y_i = XOR_j T[i][j] & x_j with T[i][j] = seed[i - j + n - 1], straight from the definition.
inline Bits toeplitz_brute_force(const Bits& seed, std::size_t m, std::size_t n, const Bits& x) {
    if (seed.size() != m + n - 1 || x.size() != n) {
        throw std::invalid_argument("toeplitz_brute_force: size mismatch");
    }
    Bits y(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        std::uint8_t acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc ^= static_cast<std::uint8_t>(seed[i + n - 1 - j] & x[j]);
        }
        y[i] = acc;
    }
    return y;
}

inline double normal_pdf(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

/// Composite Simpson rule, `intervals` rounded up to even.
template <class F>
double simpson(F f, double a, double b, int intervals) {
    if (intervals % 2 != 0) {
        ++intervals;
    }
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) {
        sum += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    }
    return sum * h / 3.0;
}

/// Mass of each code of a `bits`-bit ADC (codes k at [k - 0.5, k + 0.5), edges absorbing
/// the tails) under N(mean, sigma^2), by numeric integration of the density.
inline std::vector<double> gaussian_bin_masses(double sigma, double mean, int bits) {
    const int codes = 1 << bits;
    std::vector<double> mass(codes, 0.0);
    auto pdf = [&](double x) { return normal_pdf(x, mean, sigma); };
    const double reach = 40.0 * sigma;
    for (int k = 1; k < codes - 1; ++k) {
        mass[k] = simpson(pdf, k - 0.5, k + 0.5, 256);
    }
    const double lo_edge = 0.5;
    const double hi_edge = codes - 1.5;
    mass[0] = lo_edge > mean - reach ? simpson(pdf, std::min(mean - reach, lo_edge - 1.0), lo_edge, 20000) : 0.0;
    mass[codes - 1] = hi_edge < mean + reach ? simpson(pdf, hi_edge, std::max(mean + reach, hi_edge + 1.0), 20000) : 0.0;
    return mass;
}

inline double min_entropy_of(const std::vector<double>& mass) {
    double pmax = 0.0;
    for (double p : mass) {
        pmax = std::max(pmax, p);
    }
    return -std::log2(pmax);
}

/// Bisection on sigma for a target min-entropy, using the numeric bin masses.
inline double sigma_for_entropy_bisection(double target_bits, double mean, int bits) {
    // Above roughly 170 codes the saturated edge bins outweigh the centre bin and
    // H_inf stops increasing with sigma.
    double lo = 1.0;
    double hi = 150.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (min_entropy_of(gaussian_bin_masses(mid, mean, bits)) < target_bits) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Line {
    double slope;
    double intercept;
};

/// Least squares via the 2x2 normal equations, solved by Cramer's rule in long double.
inline Line normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<long double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = n * sxx - sx * sx;
    return {static_cast<double>((n * sxy - sx * sy) / det), static_cast<double>((sxx * sy - sx * sxy) / det)};
}

/// Normalized autocovariance at `lag`, double loop in long double.
inline double autocorrelation(const std::vector<double>& x, std::size_t lag) {
    long double mean = 0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<long double>(x.size());
    long double num = 0, den = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - mean) * (x[t] - mean);
        if (t + lag < x.size()) {
            num += (x[t] - mean) * (x[t + lag] - mean);
        }
    }
    return static_cast<double>(num / den);
}

/// Number of the first n/2 DFT moduli of (2e - 1) below sqrt(ln(1/0.05) n), by direct summation.
inline std::size_t dft_peaks_below_threshold(const Bits& e) {
    const std::size_t n = e.size();
    const double threshold = std::sqrt(std::log(1.0 / 0.05) * static_cast<double>(n));
    std::size_t below = 0;
    for (std::size_t f = 0; f < n / 2; ++f) {
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double x = e[t] ? 1.0 : -1.0;
            const double a = -2.0 * M_PI * static_cast<double>(f * t % n) / static_cast<double>(n);
            re += x * std::cos(a);
            im += x * std::sin(a);
        }
        below += std::hypot(re, im) < threshold ? 1 : 0;
    }
    return below;
}

}  // namespace oracle
