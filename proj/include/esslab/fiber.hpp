#pragma once

// Single-polarization fiber link: RRC pulse shaping, symmetric split-step
// Fourier integration of the scalar NLSE with lumped EDFAs, and an ideal
// receiver (CD inverse, matched filter, constant phase removal).

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esslab/fft.hpp"
#include "esslab/pas.hpp"
#include "esslab/rng.hpp"

namespace esslab {

namespace phys {
inline constexpr double c = 299792458.0;        // m/s
inline constexpr double h = 6.62607015e-34;     // J s
} // namespace phys

enum class NonlinearCompensation { constant_phase, none };

struct LinkConfig {
    double span_length_km = 80.0;
    int n_spans = 1;
    double attenuation_db_per_km = 0.19;
    double dispersion_ps_per_nm_km = 17.0;
    double gamma_per_w_km = 1.3;
    double noise_figure_db = 5.5;
    double symbol_rate_baud = 56e9;
    double rrc_rolloff = 0.10;
    double launch_power_dbm = 0.0;
    int samples_per_symbol = 4;
    double step_km = 0.1;
    double wavelength_nm = 1550.0;
    bool noiseless = false;
    NonlinearCompensation nl_compensation = NonlinearCompensation::constant_phase;

    double alpha_per_m() const { return attenuation_db_per_km / (10.0 * std::log10(std::numbers::e)) / 1e3; }
    /// beta2 = -D lambda^2 / (2 pi c), s^2/m
    double beta2() const {
        const double d = dispersion_ps_per_nm_km * 1e-6; // s/m^2
        const double lambda = wavelength_nm * 1e-9;
        return -d * lambda * lambda / (2.0 * std::numbers::pi * phys::c);
    }
    double gamma_per_w_m() const { return gamma_per_w_km * 1e-3; }
    double span_length_m() const { return span_length_km * 1e3; }
    double sample_rate() const { return symbol_rate_baud * samples_per_symbol; }
    double carrier_frequency() const { return phys::c / (wavelength_nm * 1e-9); }
    double launch_power_w() const { return 1e-3 * std::pow(10.0, launch_power_dbm / 10.0); }
    /// linear span power gain exactly compensating the span loss
    double span_gain() const { return std::exp(alpha_per_m() * span_length_m()); }
    double spontaneous_emission_factor() const { return std::pow(10.0, noise_figure_db / 10.0) / 2.0; }
    std::size_t steps_per_span() const {
        return static_cast<std::size_t>(std::max(1.0, std::ceil(span_length_km / step_km - 1e-9)));
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
        };
        positive(span_length_km, "span_length_km");
        positive(symbol_rate_baud, "symbol_rate_baud");
        positive(step_km, "step_km");
        positive(wavelength_nm, "wavelength_nm");
        if (n_spans < 1) throw std::invalid_argument("n_spans must be >= 1");
        if (attenuation_db_per_km < 0.0 || dispersion_ps_per_nm_km < 0.0 || gamma_per_w_km < 0.0 ||
            noise_figure_db < 0.0)
            throw std::invalid_argument("fiber/amplifier parameters must be non-negative");
        if (rrc_rolloff < 0.0 || rrc_rolloff > 1.0) throw std::invalid_argument("rrc_rolloff must lie in [0, 1]");
        if (!std::isfinite(launch_power_dbm)) throw std::invalid_argument("launch power must be finite");
        if (!(static_cast<double>(samples_per_symbol) > 1.0 + rrc_rolloff))
            throw std::invalid_argument("samples_per_symbol must exceed 1 + rolloff (Nyquist)");
    }
};

struct Waveform {
    std::vector<cplx> samples; ///< sqrt(W); |sample|^2 is instantaneous power
    double sample_rate = 0.0;

    double mean_power() const {
        double p = 0.0;
        for (const auto& s : samples) p += std::norm(s);
        return samples.empty() ? 0.0 : p / static_cast<double>(samples.size());
    }
};

class numerical_blowup_error : public std::runtime_error {
public:
    explicit numerical_blowup_error(std::size_t step)
        : std::runtime_error("non-finite field during split-step integration at step " + std::to_string(step)),
          step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Raised-cosine spectrum at frequency f (Hz), unit passband.
inline double raised_cosine(double f, double symbol_rate, double rolloff) {
    const double af = std::abs(f) / symbol_rate;
    const double lo = (1.0 - rolloff) / 2.0, hi = (1.0 + rolloff) / 2.0;
    if (af <= lo) return 1.0;
    if (af > hi) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi / rolloff * (af - lo)));
}

namespace detail {

inline double bin_frequency(std::size_t k, std::size_t n, double fs) {
    return bin_angular_frequency(k, n, fs) / (2.0 * std::numbers::pi);
}

inline void check_length(std::size_t samples, const LinkConfig& cfg) {
    if (samples == 0 || samples % static_cast<std::size_t>(cfg.samples_per_symbol) != 0)
        throw std::invalid_argument("waveform length must be a positive multiple of samples_per_symbol");
}

} // namespace detail

/// Zero-stuffs by samples_per_symbol and applies a root-raised-cosine filter
/// (circular, frequency domain). Mean power equals launch power times the
/// mean symbol energy, so unit-energy symbols launch exactly P on average.
inline Waveform rrc_shape(const ComplexSymbolFrame& frame, const LinkConfig& cfg) {
    cfg.validate();
    if (frame.size() == 0) throw std::invalid_argument("empty frame");
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    const std::size_t n = frame.size() * sps;
    const double fs = cfg.sample_rate();
    FftPlan fft(n);
    auto buf = fft.data();
    std::fill(buf.begin(), buf.end(), cplx{});
    for (std::size_t j = 0; j < frame.size(); ++j) buf[j * sps] = frame.symbols[j];
    fft.forward();
    const double amp = std::sqrt(cfg.launch_power_w()) * static_cast<double>(sps) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
        buf[k] *= amp * std::sqrt(raised_cosine(detail::bin_frequency(k, n, fs), cfg.symbol_rate_baud, cfg.rrc_rolloff));
    fft.backward();
    return Waveform{std::vector<cplx>(buf.begin(), buf.end()), fs};
}

/// RRC matched filter, symbol-spaced sampling and removal of the launch
/// scaling; exact inverse of rrc_shape on a back-to-back link.
inline ComplexSymbolFrame matched_filter(const Waveform& wave, const LinkConfig& cfg) {
    cfg.validate();
    detail::check_length(wave.samples.size(), cfg);
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    const std::size_t n = wave.samples.size();
    FftPlan fft(n);
    auto buf = fft.data();
    std::copy(wave.samples.begin(), wave.samples.end(), buf.begin());
    fft.forward();
    const double amp = 1.0 / (std::sqrt(cfg.launch_power_w()) * static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        buf[k] *= amp * std::sqrt(raised_cosine(detail::bin_frequency(k, n, wave.sample_rate), cfg.symbol_rate_baud,
                                                cfg.rrc_rolloff));
    fft.backward();
    ComplexSymbolFrame out;
    out.symbols.reserve(n / sps);
    for (std::size_t j = 0; j < n / sps; ++j) out.symbols.push_back(buf[j * sps]);
    return out;
}

/// Frequency response of linear propagation over `length_m` with loss
/// exp(-alpha/2 z) in amplitude: H(w) = exp((-alpha/2 + i beta2 w^2 / 2) z).
inline std::vector<cplx> linear_response(std::size_t n, double sample_rate, double beta2, double alpha,
                                         double length_m, double extra_scale = 1.0) {
    std::vector<cplx> h(n);
    const double loss = std::exp(-0.5 * alpha * length_m) * extra_scale;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = bin_angular_frequency(k, n, sample_rate);
        h[k] = std::polar(loss, 0.5 * beta2 * w * w * length_m);
    }
    return h;
}

/// Symmetric split-step integration of one fiber span (no amplification):
/// dA/dz = -(alpha/2) A - i (beta2/2) d2A/dt2 + i gamma |A|^2 A.
/// `step_offset` only shifts the step index reported on numerical blow-up.
inline void propagate_span(std::vector<cplx>& field, double sample_rate, const LinkConfig& cfg,
                           std::size_t step_offset = 0) {
    const std::size_t n = field.size();
    const std::size_t steps = cfg.steps_per_span();
    const double h = cfg.span_length_m() / static_cast<double>(steps);
    const double alpha = cfg.alpha_per_m();
    const double beta2 = cfg.beta2();
    const double gamma = cfg.gamma_per_w_m();
    const double inv_n = 1.0 / static_cast<double>(n);

    FftPlan fft(n);
    auto buf = fft.data();
    std::copy(field.begin(), field.end(), buf.begin());

    if (gamma == 0.0) {
        // single linear operator, exact
        const auto full = linear_response(n, sample_rate, beta2, alpha, cfg.span_length_m(), inv_n);
        fft.forward();
        for (std::size_t k = 0; k < n; ++k) buf[k] *= full[k];
        fft.backward();
    } else {
        const auto half = linear_response(n, sample_rate, beta2, alpha, 0.5 * h, inv_n);
        const auto whole = linear_response(n, sample_rate, beta2, alpha, h, inv_n);
        fft.forward();
        for (std::size_t k = 0; k < n; ++k) buf[k] *= half[k];
        const double phase_per_watt = gamma * h;
        for (std::size_t s = 0; s < steps; ++s) {
            fft.backward();
            bool finite = true;
            for (auto& a : buf) {
                const double p = std::norm(a);
                finite &= std::isfinite(p);
                const double phi = phase_per_watt * p;
                a *= cplx(std::cos(phi), std::sin(phi));
            }
            if (!finite) throw numerical_blowup_error(step_offset + s);
            fft.forward();
            const auto& op = (s + 1 == steps) ? half : whole;
            for (std::size_t k = 0; k < n; ++k) buf[k] *= op[k];
        }
        fft.backward();
    }
    for (std::size_t i = 0; i < n; ++i) {
        field[i] = buf[i];
        if (!std::isfinite(field[i].real()) || !std::isfinite(field[i].imag()))
            throw numerical_blowup_error(step_offset + steps);
    }
}

/// Per-sample ASE variance (both quadratures together) of one EDFA:
/// n_sp (G - 1) h nu f_s.
inline double ase_variance(const LinkConfig& cfg) {
    return cfg.spontaneous_emission_factor() * (cfg.span_gain() - 1.0) * phys::h * cfg.carrier_frequency() *
           cfg.sample_rate();
}

/// Propagates over n_spans spans, each followed by an EDFA that restores the
/// span loss and adds circular Gaussian ASE (unless noiseless).
inline Waveform ssfm_propagate(const Waveform& wave, const LinkConfig& cfg, Rng& rng) {
    cfg.validate();
    Waveform out = wave;
    const double amp_gain = std::sqrt(cfg.span_gain());
    const double sigma = std::sqrt(ase_variance(cfg) / 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int span = 0; span < cfg.n_spans; ++span) {
        propagate_span(out.samples, out.sample_rate, cfg, static_cast<std::size_t>(span) * cfg.steps_per_span());
        for (auto& a : out.samples) {
            a *= amp_gain;
            if (!cfg.noiseless) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                a += cplx(sigma * re, sigma * im);
            }
        }
    }
    return out;
}

/// Ideal CD inverse over the whole link, matched filter, downsampling and
/// (by default) removal of a single data-aided phase angle(sum conj(tx) rx).
inline ComplexSymbolFrame receiver_chain(const Waveform& rx, const ComplexSymbolFrame& tx, const LinkConfig& cfg) {
    cfg.validate();
    detail::check_length(rx.samples.size(), cfg);
    const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    if (rx.samples.size() / sps != tx.size()) throw std::invalid_argument("received waveform does not match tx length");

    const std::size_t n = rx.samples.size();
    const double total_length = cfg.span_length_m() * cfg.n_spans;
    FftPlan fft(n);
    auto buf = fft.data();
    std::copy(rx.samples.begin(), rx.samples.end(), buf.begin());
    fft.forward();
    const double amp = 1.0 / (std::sqrt(cfg.launch_power_w()) * static_cast<double>(n));
    const double beta2 = cfg.beta2();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = bin_angular_frequency(k, n, rx.sample_rate);
        const double f = w / (2.0 * std::numbers::pi);
        const double mf = std::sqrt(raised_cosine(f, cfg.symbol_rate_baud, cfg.rrc_rolloff));
        buf[k] *= std::polar(amp * mf, -0.5 * beta2 * w * w * total_length);
    }
    fft.backward();

    ComplexSymbolFrame out;
    out.origin = tx.origin;
    out.scale = tx.scale;
    out.symbols.reserve(tx.size());
    for (std::size_t j = 0; j < tx.size(); ++j) out.symbols.push_back(buf[j * sps]);

    if (cfg.nl_compensation == NonlinearCompensation::constant_phase) {
        cplx corr{0.0, 0.0};
        for (std::size_t j = 0; j < tx.size(); ++j) corr += std::conj(tx.symbols[j]) * out.symbols[j];
        if (std::abs(corr) > 0.0) {
            const cplx derotate = std::polar(1.0, -std::arg(corr));
            for (auto& y : out.symbols) y *= derotate;
        }
    }
    return out;
}

inline constexpr double snr_cap_db = 100.0;

/// Effective SNR after least-squares complex gain: |h|^2 sum|tx|^2 / sum|rx - h tx|^2, in dB.
/// Returns +infinity for a zero residual.
inline double estimate_effective_snr(std::span<const cplx> tx, std::span<const cplx> rx) {
    if (tx.size() != rx.size()) throw std::invalid_argument("tx/rx length mismatch");
    double etx = 0.0;
    cplx cross{0.0, 0.0};
    for (std::size_t i = 0; i < tx.size(); ++i) {
        etx += std::norm(tx[i]);
        cross += std::conj(tx[i]) * rx[i];
    }
    if (!(etx > 0.0)) throw std::invalid_argument("zero transmitted energy");
    const cplx gain = cross / etx;
    double resid = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) resid += std::norm(rx[i] - gain * tx[i]);
    const double signal = std::norm(gain) * etx;
    if (resid <= signal * 1e-30) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / resid);
}

inline double estimate_effective_snr(const ComplexSymbolFrame& tx, const ComplexSymbolFrame& rx) {
    return estimate_effective_snr(std::span<const cplx>(tx.symbols), std::span<const cplx>(rx.symbols));
}

} // namespace esslab
