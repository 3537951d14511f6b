#pragma once

// Temporal metrics of channel inputs/outputs: windowed energy and the energy
// dispersion index, windowed correlation angle and its autocorrelation, and
// plain (non-temporal) moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esslab/pas.hpp"

namespace esslab {

/// G_k = sum_{i=k-W/2}^{k+W/2} |x_i|^2, i.e. W + 1 symbols per window, for
/// every k whose window lies fully inside the frame.
inline std::vector<double> windowed_energy(std::span<const cplx> symbols, std::size_t window) {
    if (window % 2 != 0) throw std::invalid_argument("window W must be even (the window spans W + 1 symbols)");
    if (window + 1 > symbols.size())
        throw std::invalid_argument("window W = " + std::to_string(window) + " needs at least W + 1 symbols");
    const std::size_t span = window + 1;
    std::vector<double> out;
    out.reserve(symbols.size() - window);
    // exact running sums would drift for long streams; prefix sums keep the error at O(eps * total)
    std::vector<double> prefix(symbols.size() + 1, 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) prefix[i + 1] = prefix[i] + std::norm(symbols[i]);
    for (std::size_t start = 0; start + span <= symbols.size(); ++start)
        out.push_back(prefix[start + span] - prefix[start]);
    return out;
}

inline std::vector<double> windowed_energy(const ComplexSymbolFrame& frame, std::size_t window) {
    return windowed_energy(std::span<const cplx>(frame.symbols), window);
}

struct EdiReport {
    std::size_t window = 0;
    double psi = 0.0;
    double mean_windowed_energy = 0.0;
    double mean_windowed_variance = 0.0;
    std::vector<std::vector<double>> series; ///< per frame, only when requested
};

/// Psi = mean over frames of Var(G^W) divided by mean over frames of E(G^W).
/// Variances are population (1/count) variances of each frame's G series.
inline EdiReport edi(std::span<const ComplexSymbolFrame> frames, std::size_t window, bool keep_series = false) {
    if (frames.empty()) throw std::invalid_argument("edi needs at least one frame");
    EdiReport r;
    r.window = window;
    double sum_var = 0.0, sum_mean = 0.0;
    for (const auto& f : frames) {
        auto g = windowed_energy(f, window);
        double m = 0.0;
        for (double v : g) m += v;
        m /= static_cast<double>(g.size());
        double var = 0.0;
        for (double v : g) var += (v - m) * (v - m);
        var /= static_cast<double>(g.size());
        sum_var += var;
        sum_mean += m;
        if (keep_series) r.series.push_back(std::move(g));
    }
    const auto nf = static_cast<double>(frames.size());
    r.mean_windowed_variance = sum_var / nf;
    r.mean_windowed_energy = sum_mean / nf;
    if (!(r.mean_windowed_energy > 0.0)) throw std::invalid_argument("edi of a zero-energy input is undefined");
    r.psi = r.mean_windowed_variance / r.mean_windowed_energy;
    return r;
}

inline EdiReport edi(const ComplexSymbolFrame& stream, std::size_t window, bool keep_series = false) {
    return edi(std::span<const ComplexSymbolFrame>(&stream, 1), window, keep_series);
}

/// theta_k = arg sum_{m=-(w-1)/2}^{(w-1)/2} conj(tx_{k-m}) rx_{k-m} over centered
/// windows fully inside the stream.
inline std::vector<double> moving_window_angle(std::span<const cplx> tx, std::span<const cplx> rx, std::size_t w) {
    if (tx.size() != rx.size()) throw std::invalid_argument("tx/rx length mismatch");
    if (w % 2 == 0) throw std::invalid_argument("angle window w must be odd");
    if (tx.size() < w) throw std::invalid_argument("stream shorter than the angle window");
    std::vector<cplx> prod(tx.size());
    for (std::size_t i = 0; i < tx.size(); ++i) prod[i] = std::conj(tx[i]) * rx[i];
    std::vector<double> theta;
    theta.reserve(tx.size() - w + 1);
    for (std::size_t start = 0; start + w <= tx.size(); ++start) {
        cplx acc{0.0, 0.0};
        for (std::size_t m = 0; m < w; ++m) acc += prod[start + m];
        theta.push_back(std::arg(acc));
    }
    return theta;
}

inline std::vector<double> moving_window_angle(const ComplexSymbolFrame& tx, const ComplexSymbolFrame& rx,
                                               std::size_t w) {
    return moving_window_angle(std::span<const cplx>(tx.symbols), std::span<const cplx>(rx.symbols), w);
}

struct AcfReport {
    std::size_t window = 0; ///< w of the angle series, informational
    std::vector<double> r;  ///< r[tau], r[0] == 1
    std::size_t samples = 0;

    /// mean |R[tau]| over tau in [first, last]
    double mean_abs(std::size_t first, std::size_t last) const {
        if (last >= r.size() || first > last) throw std::out_of_range("lag range outside the ACF");
        double s = 0.0;
        for (std::size_t t = first; t <= last; ++t) s += std::abs(r[t]);
        return s / static_cast<double>(last - first + 1);
    }
};

/// Mean-subtracted biased autocovariance, normalized so R[0] = 1.
inline AcfReport acf(std::span<const double> theta, std::size_t tau_max, std::size_t window = 0) {
    if (theta.size() <= tau_max) throw std::invalid_argument("series must be longer than tau_max");
    const auto [lo, hi] = std::minmax_element(theta.begin(), theta.end());
    if (*lo == *hi) throw std::invalid_argument("angle series is constant; ACF undefined");
    const auto n = theta.size();
    double mean = 0.0;
    for (double v : theta) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = theta[i] - mean;

    AcfReport rep;
    rep.window = window;
    rep.samples = n;
    rep.r.assign(tau_max + 1, 0.0);
    std::vector<double> c(tau_max + 1, 0.0);
    for (std::size_t tau = 0; tau <= tau_max; ++tau) {
        double s = 0.0;
        for (std::size_t k = tau; k < n; ++k) s += d[k] * d[k - tau];
        c[tau] = s / static_cast<double>(n);
    }
    if (!(c[0] > 0.0)) throw std::invalid_argument("angle series is constant; ACF undefined");
    rep.r[0] = 1.0;
    for (std::size_t tau = 1; tau <= tau_max; ++tau) rep.r[tau] = c[tau] / c[0];
    return rep;
}

struct MomentReport {
    double mean_energy = 0.0;
    double energy_variance = 0.0;
    double kurtosis_ratio = 0.0;   ///< E|x|^4 / (E|x|^2)^2
    double mean_fourth_power = 0.0;
    double mean_fourth_sum = 0.0;  ///< per frame mean of sum of rail amplitudes^4
    std::size_t count = 0;
};

namespace detail {

struct MomentAccumulator {
    double s1 = 0.0, s2 = 0.0;
    std::size_t n = 0;
    void add(double energy) {
        s1 += energy;
        s2 += energy * energy;
        ++n;
    }
    MomentReport finish() const {
        if (n == 0) throw std::invalid_argument("moments of an empty input");
        MomentReport m;
        m.count = n;
        m.mean_energy = s1 / static_cast<double>(n);
        m.mean_fourth_power = s2 / static_cast<double>(n);
        m.energy_variance = std::max(0.0, m.mean_fourth_power - m.mean_energy * m.mean_energy);
        m.kurtosis_ratio = m.mean_energy > 0.0 ? m.mean_fourth_power / (m.mean_energy * m.mean_energy) : 0.0;
        return m;
    }
};

} // namespace detail

/// Moments of the complex symbol energy |x|^2.
inline MomentReport moments(std::span<const ComplexSymbolFrame> frames) {
    detail::MomentAccumulator acc;
    double fourth_sum = 0.0;
    for (const auto& f : frames) {
        double fs = 0.0;
        for (const auto& x : f.symbols) {
            acc.add(std::norm(x));
            const double re2 = x.real() * x.real(), im2 = x.imag() * x.imag();
            fs += re2 * re2 + im2 * im2;
        }
        fourth_sum += fs;
    }
    auto m = acc.finish();
    m.mean_fourth_sum = frames.empty() ? 0.0 : fourth_sum / static_cast<double>(frames.size());
    return m;
}

/// Moments of the one-dimensional amplitude energy a^2.
inline MomentReport moments(std::span<const AmplitudeSequence> sequences) {
    detail::MomentAccumulator acc;
    double fourth_sum = 0.0;
    for (const auto& s : sequences) {
        double fs = 0.0;
        for (int a : s) {
            const double e = static_cast<double>(a) * a;
            acc.add(e);
            fs += e * e;
        }
        fourth_sum += fs;
    }
    auto m = acc.finish();
    m.mean_fourth_sum = sequences.empty() ? 0.0 : fourth_sum / static_cast<double>(sequences.size());
    return m;
}

} // namespace esslab
