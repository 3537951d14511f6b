#pragma once

// Enumerative amplitude shaping: sphere (energy-bounded), kurtosis-limited and
// band-limited trellises with lexicographic ranking/unranking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace esslab {

using count_t = boost::multiprecision::cpp_int;
using AmplitudeSequence = std::vector<int>;

/// Number of bits needed to write `value` in binary; zero for zero.
inline std::size_t bit_length(const count_t& value) {
    if (value <= 0) return 0;
    return boost::multiprecision::msb(value) + 1;
}

/// floor(log2(value)) for value >= 1.
inline std::size_t floor_log2(const count_t& value) {
    if (value <= 0) throw std::domain_error("floor_log2 of non-positive value");
    return boost::multiprecision::msb(value);
}

class AmplitudeAlphabet {
public:
    explicit AmplitudeAlphabet(std::vector<int> values) : values_(std::move(values)) {
        if (values_.size() < 2) throw std::invalid_argument("alphabet needs at least 2 amplitudes");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const int v = values_[i];
            if (v <= 0 || v % 2 == 0)
                throw std::invalid_argument("alphabet amplitudes must be positive and odd, got " + std::to_string(v));
            if (i > 0 && values_[i - 1] >= v)
                throw std::invalid_argument("alphabet amplitudes must be strictly ascending");
            const auto e = static_cast<std::int64_t>(v) * v;
            energies_.push_back(e);
            fourth_.push_back(e * e);
        }
    }

    /// {1, 3, ..., 2^m - 1}; m = 3 gives the 8-ASK rails of 64-QAM.
    static AmplitudeAlphabet ask(int levels) {
        std::vector<int> v;
        for (int i = 0; i < levels; ++i) v.push_back(2 * i + 1);
        return AmplitudeAlphabet(std::move(v));
    }

    std::size_t size() const { return values_.size(); }
    int value(std::size_t i) const { return values_[i]; }
    std::int64_t energy(std::size_t i) const { return energies_[i]; }
    std::int64_t fourth_power(std::size_t i) const { return fourth_[i]; }
    const std::vector<int>& values() const { return values_; }

    std::int64_t min_energy() const { return energies_.front(); }
    std::int64_t max_energy() const { return energies_.back(); }
    std::int64_t min_fourth_power() const { return fourth_.front(); }

    std::optional<std::size_t> index_of(int amplitude) const {
        auto it = std::lower_bound(values_.begin(), values_.end(), amplitude);
        if (it == values_.end() || *it != amplitude) return std::nullopt;
        return static_cast<std::size_t>(it - values_.begin());
    }

    friend bool operator==(const AmplitudeAlphabet& a, const AmplitudeAlphabet& b) {
        return a.values_ == b.values_;
    }

private:
    std::vector<int> values_;
    std::vector<std::int64_t> energies_;
    std::vector<std::int64_t> fourth_;
};

/// Cumulative-energy corridor |C_k - k * slope| <= half_width, slope = slope_num / slope_den.
struct EnergyBand {
    std::int64_t slope_num = 1;
    std::int64_t slope_den = 1;
    std::int64_t half_width = 0;

    bool contains(std::size_t k, std::int64_t cumulative_energy) const {
        const std::int64_t dev = slope_den * cumulative_energy - static_cast<std::int64_t>(k) * slope_num;
        return (dev < 0 ? -dev : dev) <= slope_den * half_width;
    }

    double slope() const { return static_cast<double>(slope_num) / static_cast<double>(slope_den); }

    friend bool operator==(const EnergyBand&, const EnergyBand&) = default;
};

enum class ShapingFamily { ess, kess, bess, kbess };

inline const char* to_string(ShapingFamily f) {
    switch (f) {
    case ShapingFamily::ess: return "ess";
    case ShapingFamily::kess: return "kess";
    case ShapingFamily::bess: return "bess";
    case ShapingFamily::kbess: return "kbess";
    }
    return "?";
}

struct ShapingConstraints {
    std::size_t n = 1;
    std::int64_t e_max = 0;                ///< strict bound on sum a_k^2
    std::optional<std::int64_t> k_max;     ///< strict bound on sum a_k^4
    std::optional<EnergyBand> band;        ///< enforced at k = 1..n
    std::optional<std::size_t> index_bits; ///< fixed encoder input length; defaults to floor(log2 count)

    ShapingFamily family() const {
        if (k_max && band) return ShapingFamily::kbess;
        if (k_max) return ShapingFamily::kess;
        if (band) return ShapingFamily::bess;
        return ShapingFamily::ess;
    }

    void validate(const AmplitudeAlphabet& alphabet) const {
        if (n < 1) throw std::invalid_argument("sequence length must be >= 1");
        if (e_max < static_cast<std::int64_t>(n) * alphabet.min_energy() + 1)
            throw std::invalid_argument("e_max below n * min energy + 1 admits no sequence");
        if (k_max && *k_max <= 0) throw std::invalid_argument("k_max must be positive");
        if (band) {
            if (band->half_width < 0) throw std::invalid_argument("band half-width must be >= 0");
            if (band->slope_den <= 0 || band->slope_num <= 0) throw std::invalid_argument("band slope must be > 0");
        }
    }

    friend bool operator==(const ShapingConstraints&, const ShapingConstraints&) = default;
};

/// Thrown when the constraints admit no sequence at all.
class empty_trellis_error : public std::runtime_error {
public:
    explicit empty_trellis_error(std::size_t position)
        : std::runtime_error("empty trellis: no admissible state at position " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

enum class Violation { length, alphabet, energy, fourth_power, band };

inline const char* to_string(Violation v) {
    switch (v) {
    case Violation::length: return "length";
    case Violation::alphabet: return "alphabet";
    case Violation::energy: return "energy";
    case Violation::fourth_power: return "fourth_power";
    case Violation::band: return "band";
    }
    return "?";
}

/// Thrown by decode for a sequence outside the admissible set.
class inadmissible_sequence_error : public std::invalid_argument {
public:
    inadmissible_sequence_error(Violation what, std::size_t position)
        : std::invalid_argument(std::string("inadmissible sequence: ") + to_string(what) +
                                " constraint violated at position " + std::to_string(position)),
          what_(what), position_(position) {}
    Violation violation() const { return what_; }
    std::size_t position() const { return position_; }

private:
    Violation what_;
    std::size_t position_;
};

struct TrellisState {
    std::int64_t energy = 0;
    std::int64_t fourth = 0; ///< tracked only when k_max is set, zero otherwise

    friend bool operator==(const TrellisState&, const TrellisState&) = default;
};

struct TrellisStateHash {
    std::size_t operator()(const TrellisState& s) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(s.energy) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(s.fourth) + 0x7F4A7C15ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Immutable layered counting graph. Layer k maps each live state after k
/// amplitudes to the number of admissible completions to length n.
class ShapingTrellis {
public:
    using Layer = std::unordered_map<TrellisState, count_t, TrellisStateHash>;

    ShapingTrellis(AmplitudeAlphabet alphabet, ShapingConstraints constraints, std::vector<Layer> layers)
        : alphabet_(std::move(alphabet)), constraints_(std::move(constraints)), layers_(std::move(layers)) {
        total_ = completions(0, TrellisState{});
        if (constraints_.index_bits && *constraints_.index_bits > floor_log2(total_))
            throw std::invalid_argument("requested index length exceeds floor(log2(count))");
    }

    const AmplitudeAlphabet& alphabet() const { return alphabet_; }
    const ShapingConstraints& constraints() const { return constraints_; }
    std::size_t length() const { return constraints_.n; }
    const count_t& total_count() const { return total_; }

    /// Bits consumed per block by the encoder.
    std::size_t input_bits() const { return constraints_.index_bits.value_or(floor_log2(total_)); }

    /// Completion count of `state` after k amplitudes; zero if the state is dead.
    const count_t& completions(std::size_t k, const TrellisState& state) const {
        static const count_t zero = 0;
        const auto& layer = layers_.at(k);
        auto it = layer.find(state);
        return it == layer.end() ? zero : it->second;
    }

    const Layer& layer(std::size_t k) const { return layers_.at(k); }

    std::size_t state_count() const {
        std::size_t s = 0;
        for (const auto& l : layers_) s += l.size();
        return s;
    }

    TrellisState step(const TrellisState& s, std::size_t symbol) const {
        return {s.energy + alphabet_.energy(symbol), constraints_.k_max ? s.fourth + alphabet_.fourth_power(symbol) : 0};
    }

private:
    AmplitudeAlphabet alphabet_;
    ShapingConstraints constraints_;
    std::vector<Layer> layers_;
    count_t total_;
};

namespace detail {

// Admissibility of a prefix state after k amplitudes, including the cheapest
// possible completion so obviously dead branches are never stored.
inline bool prefix_admissible(const AmplitudeAlphabet& alphabet, const ShapingConstraints& c, std::size_t k,
                              const TrellisState& s) {
    const auto remaining = static_cast<std::int64_t>(c.n - k);
    if (s.energy + remaining * alphabet.min_energy() >= c.e_max) return false;
    if (c.k_max && s.fourth + remaining * alphabet.min_fourth_power() >= *c.k_max) return false;
    if (c.band && k >= 1 && !c.band->contains(k, s.energy)) return false;
    return true;
}

} // namespace detail

/// Builds the trellis of all length-n sequences with sum a^2 < e_max,
/// sum a^4 < k_max (if set) and every cumulative energy inside the band (if set).
inline ShapingTrellis build_trellis(const AmplitudeAlphabet& alphabet, const ShapingConstraints& constraints) {
    constraints.validate(alphabet);
    const std::size_t n = constraints.n;
    const bool track_fourth = constraints.k_max.has_value();

    // forward reachability
    std::vector<std::vector<TrellisState>> reach(n + 1);
    reach[0].push_back(TrellisState{});
    for (std::size_t k = 0; k < n; ++k) {
        std::unordered_map<TrellisState, char, TrellisStateHash> next;
        next.reserve(reach[k].size() * alphabet.size());
        for (const auto& s : reach[k]) {
            for (std::size_t v = 0; v < alphabet.size(); ++v) {
                TrellisState t{s.energy + alphabet.energy(v), track_fourth ? s.fourth + alphabet.fourth_power(v) : 0};
                if (detail::prefix_admissible(alphabet, constraints, k + 1, t)) next.emplace(t, 0);
            }
        }
        if (next.empty()) throw empty_trellis_error(k + 1);
        reach[k + 1].reserve(next.size());
        for (const auto& [s, _] : next) reach[k + 1].push_back(s);
    }

    // backward completion counts; dead states are dropped
    std::vector<ShapingTrellis::Layer> layers(n + 1);
    layers[n].reserve(reach[n].size());
    for (const auto& s : reach[n]) layers[n].emplace(s, count_t(1));
    for (std::size_t k = n; k-- > 0;) {
        auto& layer = layers[k];
        layer.reserve(reach[k].size());
        const auto& succ = layers[k + 1];
        for (const auto& s : reach[k]) {
            count_t total = 0;
            for (std::size_t v = 0; v < alphabet.size(); ++v) {
                TrellisState t{s.energy + alphabet.energy(v), track_fourth ? s.fourth + alphabet.fourth_power(v) : 0};
                if (auto it = succ.find(t); it != succ.end()) total += it->second;
            }
            if (total != 0) layer.emplace(s, std::move(total));
        }
        reach[k].clear();
        reach[k].shrink_to_fit();
        if (layer.empty()) throw empty_trellis_error(k);
    }
    return ShapingTrellis(alphabet, constraints, std::move(layers));
}

inline count_t count_sequences(const ShapingTrellis& trellis) { return trellis.total_count(); }

/// Sequence of lexicographic rank `index` (ascending amplitude order per position).
inline AmplitudeSequence encode_index(const ShapingTrellis& trellis, const count_t& index) {
    if (index < 0 || index >= trellis.total_count())
        throw std::out_of_range("index outside [0, total_count)");
    const auto& alphabet = trellis.alphabet();
    AmplitudeSequence out;
    out.reserve(trellis.length());
    count_t residual = index;
    TrellisState s{};
    for (std::size_t k = 0; k < trellis.length(); ++k) {
        bool placed = false;
        for (std::size_t v = 0; v < alphabet.size(); ++v) {
            const auto t = trellis.step(s, v);
            const count_t& branch = trellis.completions(k + 1, t);
            if (residual < branch) {
                out.push_back(alphabet.value(v));
                s = t;
                placed = true;
                break;
            }
            residual -= branch;
        }
        if (!placed) throw std::logic_error("trellis counts inconsistent during unranking");
    }
    return out;
}

/// Big-endian bit string (one bit per element, values 0/1) of exactly input_bits() bits.
inline AmplitudeSequence encode_bits(const ShapingTrellis& trellis, std::span<const std::uint8_t> bits) {
    if (bits.size() != trellis.input_bits())
        throw std::invalid_argument("expected " + std::to_string(trellis.input_bits()) + " input bits, got " +
                                    std::to_string(bits.size()));
    count_t index = 0;
    for (auto b : bits) {
        index <<= 1;
        if (b) index |= 1;
    }
    return encode_index(trellis, index);
}

/// First violated constraint of `seq`, if any.
inline std::optional<std::pair<Violation, std::size_t>> find_violation(const AmplitudeAlphabet& alphabet,
                                                                       const ShapingConstraints& c,
                                                                       std::span<const int> seq) {
    if (seq.size() != c.n) return std::pair{Violation::length, seq.size()};
    std::int64_t e = 0;
    std::int64_t q = 0;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        const auto idx = alphabet.index_of(seq[k]);
        if (!idx) return std::pair{Violation::alphabet, k};
        e += alphabet.energy(*idx);
        q += alphabet.fourth_power(*idx);
        if (e >= c.e_max) return std::pair{Violation::energy, k};
        if (c.k_max && q >= *c.k_max) return std::pair{Violation::fourth_power, k};
        if (c.band && !c.band->contains(k + 1, e)) return std::pair{Violation::band, k};
    }
    return std::nullopt;
}

inline bool is_admissible(const AmplitudeAlphabet& alphabet, const ShapingConstraints& c, std::span<const int> seq) {
    return !find_violation(alphabet, c, seq).has_value();
}

/// Lexicographic rank of an admissible sequence; inverse of encode_index.
inline count_t decode_sequence(const ShapingTrellis& trellis, std::span<const int> seq) {
    const auto& alphabet = trellis.alphabet();
    if (auto bad = find_violation(alphabet, trellis.constraints(), seq))
        throw inadmissible_sequence_error(bad->first, bad->second);
    count_t rank = 0;
    TrellisState s{};
    for (std::size_t k = 0; k < seq.size(); ++k) {
        const std::size_t chosen = *alphabet.index_of(seq[k]);
        for (std::size_t v = 0; v < chosen; ++v) rank += trellis.completions(k + 1, trellis.step(s, v));
        s = trellis.step(s, chosen);
    }
    return rank;
}

/// K_max derived from E_max: floor(ratio * n * (E_max / n)^2).
struct FourthPowerRule {
    double ratio = 1.0;
    std::int64_t k_max_for(std::int64_t e_max, std::size_t n) const {
        const double e = static_cast<double>(e_max);
        return static_cast<std::int64_t>(std::floor(ratio * e * e / static_cast<double>(n)));
    }
};

/// Band derived from E_max. Without an explicit slope the corridor follows
/// (E_max - 1) / n per amplitude.
struct BandRule {
    std::int64_t half_width = 0;
    std::optional<std::pair<std::int64_t, std::int64_t>> slope; ///< numerator, denominator

    EnergyBand band_for(std::int64_t e_max, std::size_t n) const {
        if (slope) return EnergyBand{slope->first, slope->second, half_width};
        return EnergyBand{e_max - 1, static_cast<std::int64_t>(n), half_width};
    }
};

/// Sorted distinct values of sum a_k^2 over all length-n sequences.
inline std::vector<std::int64_t> achievable_energies(const AmplitudeAlphabet& alphabet, std::size_t n) {
    const std::int64_t top = static_cast<std::int64_t>(n) * alphabet.max_energy();
    std::vector<char> cur(static_cast<std::size_t>(top) + 1, 0), next(cur.size(), 0);
    cur[0] = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::fill(next.begin(), next.end(), 0);
        for (std::int64_t e = 0; e <= top; ++e) {
            if (!cur[static_cast<std::size_t>(e)]) continue;
            for (std::size_t v = 0; v < alphabet.size(); ++v) {
                const auto t = e + alphabet.energy(v);
                if (t <= top) next[static_cast<std::size_t>(t)] = 1;
            }
        }
        std::swap(cur, next);
    }
    std::vector<std::int64_t> out;
    for (std::int64_t e = 0; e <= top; ++e)
        if (cur[static_cast<std::size_t>(e)]) out.push_back(e);
    return out;
}

/// Smallest E_max (one above an achievable total energy) whose trellis
/// carries at least ceil(n * target_rate) bits. The returned constraints pin
/// index_bits to that value.
inline ShapingConstraints calibrate_emax(const AmplitudeAlphabet& alphabet, std::size_t n, double target_rate,
                                         std::optional<FourthPowerRule> fourth_rule = std::nullopt,
                                         std::optional<BandRule> band_rule = std::nullopt) {
    if (n < 1) throw std::invalid_argument("sequence length must be >= 1");
    const double full_rate = std::log2(static_cast<double>(alphabet.size()));
    if (!(target_rate > 0.0) || target_rate > full_rate + 1e-12)
        throw std::invalid_argument("target rate must lie in (0, log2|alphabet|]");
    const auto want = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * target_rate - 1e-9));

    const auto energies = achievable_energies(alphabet, n);
    auto make = [&](std::size_t candidate) {
        ShapingConstraints c;
        c.n = n;
        c.e_max = energies[candidate] + 1;
        if (fourth_rule) c.k_max = fourth_rule->k_max_for(c.e_max, n);
        if (band_rule) c.band = band_rule->band_for(c.e_max, n);
        return c;
    };
    auto carries = [&](const ShapingConstraints& c) {
        try {
            return floor_log2(build_trellis(alphabet, c).total_count()) >= want;
        } catch (const empty_trellis_error&) {
            return false;
        } catch (const std::invalid_argument&) {
            return false;
        }
    };

    // Without a band the count is monotone in E_max: binary search.
    std::size_t lo = 0, hi = energies.size();
    {
        ShapingConstraints top;
        top.n = n;
        top.e_max = energies.back() + 1;
        if (!carries(top)) throw std::domain_error("target rate unreachable even without constraints");
    }
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        ShapingConstraints c = make(mid);
        c.band.reset();
        if (carries(c)) hi = mid;
        else lo = mid + 1;
    }
    if (!band_rule) {
        if (lo >= energies.size()) throw std::domain_error("target rate unreachable under the fourth-power rule");
        auto c = make(lo);
        c.index_bits = want;
        return c;
    }
    // The band slope moves with E_max, so sweep upward from the unbanded minimum.
    for (std::size_t i = lo; i < energies.size(); ++i) {
        auto c = make(i);
        if (carries(c)) {
            c.index_bits = want;
            return c;
        }
    }
    throw std::domain_error("target rate unreachable under the band rule");
}

} // namespace esslab
