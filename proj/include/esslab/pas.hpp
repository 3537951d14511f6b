#pragma once

// Probabilistic amplitude shaping front end: amplitudes plus uniform signs to
// 64-QAM symbols, and the uniform 64-QAM baseline.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "esslab/rng.hpp"
#include "esslab/shaping.hpp"

namespace esslab {

using cplx = std::complex<double>;

enum class Scheme { uniform, ess, kess, bess };

inline const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::uniform: return "uniform";
    case Scheme::ess: return "ess";
    case Scheme::kess: return "kess";
    case Scheme::bess: return "bess";
    }
    return "?";
}

inline Scheme scheme_from_string(std::string_view s) {
    if (s == "uniform") return Scheme::uniform;
    if (s == "ess") return Scheme::ess;
    if (s == "kess") return Scheme::kess;
    if (s == "bess") return Scheme::bess;
    throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

struct ComplexSymbolFrame {
    std::vector<cplx> symbols;
    double scale = 1.0; ///< symbols were divided by this
    Scheme origin = Scheme::uniform;

    std::size_t size() const { return symbols.size(); }
    double energy() const {
        double e = 0.0;
        for (const auto& x : symbols) e += std::norm(x);
        return e;
    }
};

/// Equiprobable +-1 signs.
class SignSource {
public:
    explicit SignSource(std::uint64_t seed) : rng_(make_rng(seed)) {}

    int next() {
        if (avail_ == 0) {
            word_ = rng_();
            avail_ = 64;
        }
        const int s = (word_ & 1u) ? -1 : 1;
        word_ >>= 1;
        --avail_;
        return s;
    }

    std::vector<int> draw(std::size_t count) {
        std::vector<int> out(count);
        for (auto& s : out) s = next();
        return out;
    }

private:
    Rng rng_;
    std::uint64_t word_ = 0;
    int avail_ = 0;
};

/// Symbol j = s[2j] a[2j] + i s[2j+1] a[2j+1].
inline ComplexSymbolFrame map_to_qam(std::span<const int> amplitudes, std::span<const int> signs,
                                     Scheme origin = Scheme::ess) {
    if (amplitudes.size() != signs.size()) throw std::invalid_argument("amplitude/sign length mismatch");
    if (amplitudes.size() % 2 != 0) throw std::invalid_argument("odd amplitude count cannot fill QAM symbols");
    ComplexSymbolFrame f;
    f.origin = origin;
    f.symbols.reserve(amplitudes.size() / 2);
    for (std::size_t j = 0; j + 1 < amplitudes.size(); j += 2) {
        if (signs[j] * signs[j] != 1 || signs[j + 1] * signs[j + 1] != 1)
            throw std::invalid_argument("signs must be +1 or -1");
        f.symbols.emplace_back(signs[j] * amplitudes[j], signs[j + 1] * amplitudes[j + 1]);
    }
    return f;
}

/// i.i.d. 64-QAM with I, Q uniform on {+-1, +-3, +-5, +-7}; unnormalized.
inline ComplexSymbolFrame generate_uniform_frame(std::size_t n_symbols, Rng& rng) {
    if (n_symbols < 1) throw std::invalid_argument("n_symbols must be >= 1");
    ComplexSymbolFrame f;
    f.origin = Scheme::uniform;
    f.symbols.reserve(n_symbols);
    std::uniform_int_distribution<int> level(0, 7);
    for (std::size_t j = 0; j < n_symbols; ++j) {
        const int i = 2 * level(rng) - 7;
        const int q = 2 * level(rng) - 7;
        f.symbols.emplace_back(i, q);
    }
    return f;
}

/// Divides every symbol by sqrt(mean_energy) and records that scale.
inline void normalize_power(std::span<ComplexSymbolFrame> frames, double mean_energy) {
    if (!(mean_energy > 0.0) || !std::isfinite(mean_energy))
        throw std::invalid_argument("mean energy must be positive and finite");
    const double s = std::sqrt(mean_energy);
    for (auto& f : frames) {
        for (auto& x : f.symbols) x /= s;
        f.scale *= s;
    }
}

inline void normalize_power(ComplexSymbolFrame& frame, double mean_energy) {
    normalize_power(std::span<ComplexSymbolFrame>(&frame, 1), mean_energy);
}

inline double mean_symbol_energy(std::span<const ComplexSymbolFrame> frames) {
    double e = 0.0;
    std::size_t n = 0;
    for (const auto& f : frames) {
        e += f.energy();
        n += f.size();
    }
    if (n == 0) throw std::invalid_argument("no symbols");
    return e / static_cast<double>(n);
}

/// Draws uniformly random k-bit indices and unranks them through a trellis.
class ShapedBlockSource {
public:
    ShapedBlockSource(const ShapingTrellis& trellis, std::uint64_t seed) : trellis_(&trellis), rng_(make_rng(seed)) {}

    count_t next_index() {
        const std::size_t bits = trellis_->input_bits();
        count_t index = 0;
        std::size_t have = 0;
        while (have < bits) {
            const std::size_t take = std::min<std::size_t>(64, bits - have);
            std::uint64_t w = rng_();
            if (take < 64) w &= (std::uint64_t{1} << take) - 1;
            index <<= take;
            index |= w;
            have += take;
        }
        return index;
    }

    AmplitudeSequence next_block() { return encode_index(*trellis_, next_index()); }

private:
    const ShapingTrellis* trellis_;
    Rng rng_;
};

/// Concatenated shaped stream of exactly n_symbols symbols (the last block may
/// be cut). Returned unnormalized; block boundaries every length()/2 symbols.
inline ComplexSymbolFrame generate_shaped_stream(const ShapingTrellis& trellis, Scheme origin, std::size_t n_symbols,
                                                 std::uint64_t index_seed, std::uint64_t sign_seed) {
    if (trellis.length() % 2 != 0) throw std::invalid_argument("shaping block length must be even");
    ShapedBlockSource source(trellis, index_seed);
    SignSource signs(sign_seed);
    ComplexSymbolFrame out;
    out.origin = origin;
    out.symbols.reserve(n_symbols + trellis.length() / 2);
    while (out.symbols.size() < n_symbols) {
        const auto block = source.next_block();
        const auto s = signs.draw(block.size());
        const auto f = map_to_qam(block, s, origin);
        out.symbols.insert(out.symbols.end(), f.symbols.begin(), f.symbols.end());
    }
    out.symbols.resize(n_symbols);
    return out;
}

/// Splits a stream into consecutive frames of `frame_len` symbols (a short tail is dropped).
inline std::vector<ComplexSymbolFrame> split_frames(const ComplexSymbolFrame& stream, std::size_t frame_len) {
    if (frame_len == 0) throw std::invalid_argument("frame length must be >= 1");
    std::vector<ComplexSymbolFrame> out;
    for (std::size_t start = 0; start + frame_len <= stream.size(); start += frame_len) {
        ComplexSymbolFrame f;
        f.origin = stream.origin;
        f.scale = stream.scale;
        f.symbols.assign(stream.symbols.begin() + static_cast<std::ptrdiff_t>(start),
                         stream.symbols.begin() + static_cast<std::ptrdiff_t>(start + frame_len));
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace esslab
