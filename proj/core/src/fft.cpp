#include "qrng/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace qrng::fft {

namespace {

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

template <typename T>
std::unique_ptr<T, FftwFree> fftw_buffer(std::size_t count) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    return std::unique_ptr<T, FftwFree>(p);
}

using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDestroy>;

}  // namespace

std::vector<std::complex<double>> forward_real(std::span<const double> input) {
    const std::size_t n = input.size();
    if (n == 0) {
        return {};
    }
    auto in = fftw_buffer<double>(n);
    auto out = fftw_buffer<fftw_complex>(n / 2 + 1);
    PlanPtr plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    if (!plan) {
        throw std::runtime_error("fft::forward_real: FFTW planning failed");
    }
    std::copy(input.begin(), input.end(), in.get());
    fftw_execute(plan.get());

    std::vector<std::complex<double>> result(n / 2 + 1);
    for (std::size_t i = 0; i < result.size(); ++i) {
        result[i] = {out.get()[i][0], out.get()[i][1]};
    }
    return result;
}

std::vector<double> inverse_real(std::span<const std::complex<double>> spectrum, std::size_t n) {
    if (n == 0) {
        return {};
    }
    if (spectrum.size() != n / 2 + 1) {
        throw std::invalid_argument("fft::inverse_real: spectrum must have n/2 + 1 bins");
    }
    auto in = fftw_buffer<fftw_complex>(n / 2 + 1);
    auto out = fftw_buffer<double>(n);
    PlanPtr plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    if (!plan) {
        throw std::runtime_error("fft::inverse_real: FFTW planning failed");
    }
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        in.get()[i][0] = spectrum[i].real();
        in.get()[i][1] = spectrum[i].imag();
    }
    fftw_execute(plan.get());

    std::vector<double> result(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        result[i] = out.get()[i] * scale;
    }
    return result;
}

}  // namespace qrng::fft
