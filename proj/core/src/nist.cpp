// SP 800-22 statistics for the eight-test subset. Parameters and category tables follow
// the NIST reference implementation (sts-2.1.2).
#include "qrng/analysis.hpp"

#include "qrng/fft.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

namespace qrng::nist {

namespace {

double igamc(double a, double x) {
    if (!(x > 0.0)) {
        return 1.0;
    }
    return boost::math::gamma_q(a, x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

TestResult make_result(std::string name, double p, double statistic, double alpha) {
    TestResult r;
    r.test_name = std::move(name);
    r.p_value = std::clamp(p, 0.0, 1.0);
    r.statistic = statistic;
    r.alpha = alpha;
    r.pass = r.p_value >= alpha;
    return r;
}

TestResult skipped(std::string name, double alpha, std::string why) {
    TestResult r;
    r.test_name = std::move(name);
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    r.skipped = true;
    r.alpha = alpha;
    r.note = std::move(why);
    return r;
}

std::string too_short(std::size_t have, std::size_t need) {
    return "needs at least " + std::to_string(need) + " bits, got " + std::to_string(have);
}

// Short inputs still get a p-value (the reference worked examples are 10 bits long);
// below the recommended length the result carries a note instead.
TestResult noted(TestResult r, std::size_t have, std::size_t recommended) {
    if (have < recommended) {
        r.note = "below the recommended " + std::to_string(recommended) + " bits";
    }
    return r;
}

unsigned floor_log2(std::size_t n) { return n == 0 ? 0U : static_cast<unsigned>(std::bit_width(n) - 1); }

// Overlapping m-bit pattern counts with the sequence wrapped cyclically. Pattern value
// has the first bit in the most significant position.
std::vector<std::uint64_t> cyclic_pattern_counts(const BitStream& bits, unsigned m) {
    const std::size_t n = bits.size();
    std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
    const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
    std::uint64_t value = 0;
    for (unsigned i = 0; i + 1 < m; ++i) {
        value = (value << 1) | static_cast<std::uint64_t>(bits.get(i % n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t next = i + m - 1;
        value = ((value << 1) | static_cast<std::uint64_t>(bits.get(next < n ? next : next - n))) & mask;
        ++counts[value];
    }
    return counts;
}

std::vector<std::uint64_t> marginalize(const std::vector<std::uint64_t>& counts) {
    std::vector<std::uint64_t> out(counts.size() / 2, 0);
    for (std::size_t v = 0; v < counts.size(); ++v) {
        out[v >> 1] += counts[v];
    }
    return out;
}

long double psi_squared(const std::vector<std::uint64_t>& counts, std::size_t n) {
    if (counts.size() <= 1) {
        return 0.0L;
    }
    long double sum_sq = 0.0L;
    for (std::uint64_t c : counts) {
        sum_sq += static_cast<long double>(c) * static_cast<long double>(c);
    }
    const long double nd = static_cast<long double>(n);
    return static_cast<long double>(counts.size()) / nd * sum_sq - nd;
}

std::size_t longest_run_in(const BitStream& bits, std::size_t offset, std::size_t length) {
    std::size_t best = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < length; ++i) {
        if (bits.get(offset + i)) {
            best = std::max(best, ++run);
        } else {
            run = 0;
        }
    }
    return best;
}

}  // namespace

TestResult frequency(const BitStream& bits, double alpha) {
    const std::size_t n = bits.size();
    if (n < 1) {
        return skipped("frequency", alpha, too_short(n, 1));
    }
    const double sum = 2.0 * static_cast<double>(bits.popcount()) - static_cast<double>(n);
    const double s_obs = std::abs(sum) / std::sqrt(static_cast<double>(n));
    return noted(make_result("frequency", std::erfc(s_obs / std::numbers::sqrt2), s_obs, alpha), n, 100);
}

TestResult block_frequency(const BitStream& bits, std::size_t block_length, double alpha) {
    const std::size_t n = bits.size();
    if (block_length == 0 || n < block_length) {
        return skipped("block_frequency", alpha, too_short(n, std::max<std::size_t>(1, block_length)));
    }
    const std::size_t blocks = n / block_length;
    double chi_sq = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < block_length; ++i) {
            ones += bits.get(b * block_length + i) ? 1 : 0;
        }
        const double pi = static_cast<double>(ones) / static_cast<double>(block_length) - 0.5;
        chi_sq += pi * pi;
    }
    chi_sq *= 4.0 * static_cast<double>(block_length);
    return noted(make_result("block_frequency", igamc(static_cast<double>(blocks) / 2.0, chi_sq / 2.0), chi_sq, alpha),
                 n, 100);
}

TestResult runs(const BitStream& bits, double alpha) {
    const std::size_t n = bits.size();
    if (n < 2) {
        return skipped("runs", alpha, too_short(n, 2));
    }
    const double nd = static_cast<double>(n);
    const double pi = static_cast<double>(bits.popcount()) / nd;
    if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
        auto r = make_result("runs", 0.0, 0.0, alpha);
        r.note = "frequency prerequisite not met";
        return r;
    }
    std::size_t transitions = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        transitions += bits.get(i) != bits.get(i + 1) ? 1 : 0;
    }
    const double v_obs = static_cast<double>(transitions + 1);
    const double p = std::erfc(std::abs(v_obs - 2.0 * nd * pi * (1.0 - pi)) /
                               (2.0 * std::sqrt(2.0 * nd) * pi * (1.0 - pi)));
    return noted(make_result("runs", p, v_obs, alpha), n, 100);
}

TestResult longest_run_of_ones(const BitStream& bits, double alpha) {
    const std::size_t n = bits.size();
    if (n < 128) {
        return skipped("longest_run_of_ones", alpha, too_short(n, 128));
    }
    std::size_t block_length = 0;
    std::size_t lowest = 0;  // run length of the first category (that length or shorter)
    std::vector<double> probabilities;
    if (n < 6272) {
        block_length = 8;
        lowest = 1;
        probabilities = {0.2148, 0.3672, 0.2305, 0.1875};
    } else if (n < 750000) {
        block_length = 128;
        lowest = 4;
        probabilities = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
    } else {
        block_length = 10000;
        lowest = 10;
        probabilities = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
    }
    const std::size_t categories = probabilities.size();
    const std::size_t blocks = n / block_length;
    std::vector<double> observed(categories, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t run = longest_run_in(bits, b * block_length, block_length);
        const std::size_t clamped = std::clamp(run, lowest, lowest + categories - 1);
        observed[clamped - lowest] += 1.0;
    }
    double chi_sq = 0.0;
    for (std::size_t c = 0; c < categories; ++c) {
        const double expected = static_cast<double>(blocks) * probabilities[c];
        chi_sq += (observed[c] - expected) * (observed[c] - expected) / expected;
    }
    const double dof = static_cast<double>(categories - 1);
    return make_result("longest_run_of_ones", igamc(dof / 2.0, chi_sq / 2.0), chi_sq, alpha);
}

TestResult cumulative_sums(const BitStream& bits, bool forward, double alpha) {
    const std::string name = forward ? "cumulative_sums_forward" : "cumulative_sums_backward";
    const std::size_t n = bits.size();
    if (n < 1) {
        return skipped(name, alpha, too_short(n, 1));
    }
    long long sum = 0;
    long long z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool bit = bits.get(forward ? i : n - 1 - i);
        sum += bit ? 1 : -1;
        z = std::max(z, sum < 0 ? -sum : sum);
    }
    const long long nn = static_cast<long long>(n);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double zd = static_cast<double>(z);

    // Integer division truncates toward zero, exactly as in the reference code.
    double sum1 = 0.0;
    for (long long k = (-nn / z + 1) / 4; k <= (nn / z - 1) / 4; ++k) {
        sum1 += normal_cdf((4.0 * static_cast<double>(k) + 1.0) * zd / sqrt_n) -
                normal_cdf((4.0 * static_cast<double>(k) - 1.0) * zd / sqrt_n);
    }
    double sum2 = 0.0;
    for (long long k = (-nn / z - 3) / 4; k <= (nn / z - 1) / 4; ++k) {
        sum2 += normal_cdf((4.0 * static_cast<double>(k) + 3.0) * zd / sqrt_n) -
                normal_cdf((4.0 * static_cast<double>(k) + 1.0) * zd / sqrt_n);
    }
    return noted(make_result(name, 1.0 - sum1 + sum2, zd, alpha), n, 100);
}

std::vector<TestResult> serial(const BitStream& bits, unsigned pattern_length, double alpha) {
    const std::size_t n = bits.size();
    const unsigned m = pattern_length;
    if (m < 2 || m > 24 || n == 0) {
        const std::string why = "pattern length must be in [2, 24] and the input non-empty";
        return {skipped("serial_1", alpha, why), skipped("serial_2", alpha, why)};
    }
    const auto counts_m = cyclic_pattern_counts(bits, m);
    const auto counts_m1 = marginalize(counts_m);
    const auto counts_m2 = marginalize(counts_m1);
    const long double psi_m = psi_squared(counts_m, n);
    const long double psi_m1 = psi_squared(counts_m1, n);
    const long double psi_m2 = psi_squared(counts_m2, n);
    const double del1 = static_cast<double>(psi_m - psi_m1);
    const double del2 = static_cast<double>(psi_m - 2.0L * psi_m1 + psi_m2);
    std::vector<TestResult> out{
        make_result("serial_1", igamc(std::ldexp(1.0, static_cast<int>(m) - 2), del1 / 2.0), del1, alpha),
        make_result("serial_2", igamc(std::ldexp(1.0, static_cast<int>(m) - 3), del2 / 2.0), del2, alpha),
    };
    if (static_cast<int>(m) >= static_cast<int>(floor_log2(n)) - 2) {
        for (auto& r : out) {
            r.note = "recommended m < floor(log2 n) - 2";
        }
    }
    return out;
}

TestResult approximate_entropy(const BitStream& bits, unsigned pattern_length, double alpha) {
    const std::size_t n = bits.size();
    const unsigned m = pattern_length;
    if (m < 1 || m > 23 || n == 0) {
        return skipped("approximate_entropy", alpha, "pattern length must be in [1, 23] and the input non-empty");
    }
    const auto counts_next = cyclic_pattern_counts(bits, m + 1);
    const auto counts_m = marginalize(counts_next);
    const double nd = static_cast<double>(n);
    auto phi = [nd](const std::vector<std::uint64_t>& counts) {
        double sum = 0.0;
        for (std::uint64_t c : counts) {
            if (c > 0) {
                const double p = static_cast<double>(c) / nd;
                sum += p * std::log(p);
            }
        }
        return sum;
    };
    const double ap_en = phi(counts_m) - phi(counts_next);
    const double chi_sq = 2.0 * nd * (std::numbers::ln2 - ap_en);
    auto r = make_result("approximate_entropy", igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi_sq / 2.0), chi_sq,
                         alpha);
    if (static_cast<int>(m) >= static_cast<int>(floor_log2(n)) - 5) {
        r.note = "recommended m < floor(log2 n) - 5";
    }
    return r;
}

TestResult dft_spectral(const BitStream& bits, double alpha) {
    const std::size_t n = bits.size();
    if (n < 2) {
        return skipped("dft_spectral", alpha, too_short(n, 2));
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = bits.get(i) ? 1.0 : -1.0;
    }
    const auto spectrum = fft::forward_real(x);
    const double nd = static_cast<double>(n);
    const double threshold = std::sqrt(std::log(1.0 / 0.05) * nd);
    const std::size_t half = n / 2;
    std::size_t below = 0;
    for (std::size_t j = 0; j < half; ++j) {
        below += std::abs(spectrum[j]) < threshold ? 1 : 0;
    }
    const double expected = 0.95 * nd / 2.0;
    const double d = (static_cast<double>(below) - expected) / std::sqrt(nd * 0.95 * 0.05 / 4.0);
    return noted(make_result("dft_spectral", std::erfc(std::abs(d) / std::numbers::sqrt2), d, alpha), n, 1000);
}

}  // namespace qrng::nist

namespace qrng {

std::vector<TestResult> nist_subset(const BitStream& bits, double alpha) {
    std::vector<TestResult> out;
    out.reserve(10);
    out.push_back(nist::frequency(bits, alpha));
    out.push_back(nist::block_frequency(bits, 128, alpha));
    out.push_back(nist::runs(bits, alpha));
    out.push_back(nist::longest_run_of_ones(bits, alpha));
    out.push_back(nist::cumulative_sums(bits, true, alpha));
    out.push_back(nist::cumulative_sums(bits, false, alpha));
    for (auto& r : nist::serial(bits, 16, alpha)) {
        out.push_back(std::move(r));
    }
    out.push_back(nist::approximate_entropy(bits, 10, alpha));
    out.push_back(nist::dft_spectral(bits, alpha));
    return out;
}

}  // namespace qrng
