#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>

#include <fftw3.h>

namespace esslab {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// In-place forward/backward FFT pair of a fixed length. Backward is
/// unnormalized (FFTW convention). Plans use FFTW_ESTIMATE so results do not
/// depend on planner timing.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("FFT length must be positive");
        buf_ = static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * n));
        if (!buf_) throw std::bad_alloc();
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(buf_);
        const int len = static_cast<int>(n);
        fwd_ = fftw_plan_dft_1d(len, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(len, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    std::size_t size() const { return n_; }
    std::span<std::complex<double>> data() { return {buf_, n_}; }

    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }

private:
    std::size_t n_;
    std::complex<double>* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Angular frequency of FFT bin k for an n-point grid at sample_rate.
inline double bin_angular_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const auto ki = static_cast<double>(k);
    const auto ni = static_cast<double>(n);
    const double f = (k < (n + 1) / 2 ? ki : ki - ni) * sample_rate / ni;
    return 2.0 * std::numbers::pi * f;
}

} // namespace esslab
