#pragma once

// Experiment orchestration: JSON config, power sweeps over the fiber link for
// every scheme, temporal metrics, deterministic CSV/JSON output, and the
// qualitative ordering verdict.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "esslab/fiber.hpp"
#include "esslab/metrics.hpp"
#include "esslab/pas.hpp"
#include "esslab/rng.hpp"
#include "esslab/shaping.hpp"

namespace esslab {

inline constexpr const char* version = "0.1.0";

using json = nlohmann::json;

struct ShapingSpec {
    std::size_t n = 108;
    std::vector<int> alphabet{1, 3, 5, 7};
    std::optional<double> target_rate = 1.5;
    std::optional<std::int64_t> e_max;
    std::optional<double> k_max_ratio;
    std::optional<std::int64_t> band_halfwidth;
    std::optional<double> band_slope;
};

struct SchemeSpec {
    Scheme scheme = Scheme::uniform;
    std::optional<ShapingSpec> shaping; ///< absent for uniform
};

struct AcfSpec {
    std::size_t w = 5;
    std::size_t tau_max = 50;
    int n_spans = 1;
};

struct ExperimentConfig {
    std::vector<SchemeSpec> schemes;
    LinkConfig link;
    std::vector<int> spans{1, 4};
    std::vector<double> power_sweep_dbm;
    std::size_t n_symbols = 1u << 16;
    std::size_t normalization_symbols = 1u << 17;
    std::size_t guard_symbols = 64;
    std::uint64_t master_seed = 1;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<std::size_t> edi_windows;
    bool edi_concatenated = true;
    AcfSpec acf;

    void validate() const {
        if (schemes.empty()) throw std::invalid_argument("config: no schemes");
        if (power_sweep_dbm.empty()) throw std::invalid_argument("config: empty power sweep");
        if (seeds.empty()) throw std::invalid_argument("config: no seeds");
        if (spans.empty()) throw std::invalid_argument("config: no span counts");
        if (edi_windows.empty()) throw std::invalid_argument("config: no EDI windows");
        for (auto w : edi_windows)
            if (w % 2 != 0) throw std::invalid_argument("config: EDI windows must be even");
        const auto wmax = *std::max_element(edi_windows.begin(), edi_windows.end());
        if (n_symbols < 10 * wmax) throw std::invalid_argument("config: n_symbols must be >= 10 * max EDI window");
        if (n_symbols <= 2 * guard_symbols + acf.w + acf.tau_max)
            throw std::invalid_argument("config: n_symbols too small for guards and ACF lags");
        if (acf.w % 2 == 0) throw std::invalid_argument("config: ACF window w must be odd");
        if (std::find(spans.begin(), spans.end(), acf.n_spans) == spans.end())
            throw std::invalid_argument("config: acf.n_spans must be one of the simulated span counts");
        std::set<Scheme> seen;
        for (const auto& s : schemes) {
            if (!seen.insert(s.scheme).second) throw std::invalid_argument("config: duplicate scheme");
            if (s.scheme != Scheme::uniform && !s.shaping)
                throw std::invalid_argument(std::string("config: scheme ") + to_string(s.scheme) + " needs shaping");
        }
        auto l = link;
        for (int n : spans) {
            l.n_spans = n;
            l.validate();
        }
    }
};

// ---------------------------------------------------------------- JSON

inline ShapingSpec shaping_from_json(const json& j) {
    ShapingSpec s;
    s.n = j.at("n").get<std::size_t>();
    if (j.contains("alphabet")) s.alphabet = j.at("alphabet").get<std::vector<int>>();
    s.target_rate.reset();
    if (j.contains("target_rate")) s.target_rate = j.at("target_rate").get<double>();
    if (j.contains("e_max")) s.e_max = j.at("e_max").get<std::int64_t>();
    if (s.target_rate.has_value() == s.e_max.has_value())
        throw std::invalid_argument("shaping: exactly one of e_max or target_rate is required");
    if (j.contains("k_max_ratio")) s.k_max_ratio = j.at("k_max_ratio").get<double>();
    if (j.contains("band_halfwidth")) s.band_halfwidth = j.at("band_halfwidth").get<std::int64_t>();
    if (j.contains("band_slope")) s.band_slope = j.at("band_slope").get<double>();
    if (s.band_slope && !s.band_halfwidth) throw std::invalid_argument("shaping: band_slope needs band_halfwidth");
    return s;
}

inline json to_json(const ShapingSpec& s) {
    json j{{"n", s.n}, {"alphabet", s.alphabet}};
    if (s.target_rate) j["target_rate"] = *s.target_rate;
    if (s.e_max) j["e_max"] = *s.e_max;
    if (s.k_max_ratio) j["k_max_ratio"] = *s.k_max_ratio;
    if (s.band_halfwidth) j["band_halfwidth"] = *s.band_halfwidth;
    if (s.band_slope) j["band_slope"] = *s.band_slope;
    return j;
}

inline LinkConfig link_from_json(const json& j) {
    LinkConfig l;
    l.span_length_km = j.value("span_length_km", l.span_length_km);
    l.attenuation_db_per_km = j.value("attenuation_db_per_km", l.attenuation_db_per_km);
    l.dispersion_ps_per_nm_km = j.value("dispersion_ps_per_nm_km", l.dispersion_ps_per_nm_km);
    l.gamma_per_w_km = j.value("gamma_per_w_km", l.gamma_per_w_km);
    l.noise_figure_db = j.value("noise_figure_db", l.noise_figure_db);
    l.symbol_rate_baud = j.value("symbol_rate_baud", l.symbol_rate_baud);
    l.rrc_rolloff = j.value("rrc_rolloff", l.rrc_rolloff);
    l.samples_per_symbol = j.value("samples_per_symbol", l.samples_per_symbol);
    l.step_km = j.value("step_km", l.step_km);
    l.wavelength_nm = j.value("wavelength_nm", l.wavelength_nm);
    l.noiseless = j.value("noiseless", l.noiseless);
    const auto nl = j.value("nl_compensation", std::string("constant_phase"));
    if (nl == "constant_phase") l.nl_compensation = NonlinearCompensation::constant_phase;
    else if (nl == "none") l.nl_compensation = NonlinearCompensation::none;
    else throw std::invalid_argument("link: unknown nl_compensation '" + nl + "'");
    return l;
}

inline json to_json(const LinkConfig& l) {
    return json{{"span_length_km", l.span_length_km},
                {"attenuation_db_per_km", l.attenuation_db_per_km},
                {"dispersion_ps_per_nm_km", l.dispersion_ps_per_nm_km},
                {"gamma_per_w_km", l.gamma_per_w_km},
                {"noise_figure_db", l.noise_figure_db},
                {"symbol_rate_baud", l.symbol_rate_baud},
                {"rrc_rolloff", l.rrc_rolloff},
                {"samples_per_symbol", l.samples_per_symbol},
                {"step_km", l.step_km},
                {"wavelength_nm", l.wavelength_nm},
                {"noiseless", l.noiseless},
                {"nl_compensation",
                 l.nl_compensation == NonlinearCompensation::constant_phase ? "constant_phase" : "none"}};
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    for (const auto& s : j.at("schemes")) {
        SchemeSpec spec;
        spec.scheme = scheme_from_string(s.at("name").get<std::string>());
        if (s.contains("shaping")) spec.shaping = shaping_from_json(s.at("shaping"));
        c.schemes.push_back(std::move(spec));
    }
    if (j.contains("link")) c.link = link_from_json(j.at("link"));
    if (j.contains("spans")) c.spans = j.at("spans").get<std::vector<int>>();
    c.power_sweep_dbm = j.at("power_sweep_dbm").get<std::vector<double>>();
    c.n_symbols = j.value("n_symbols", c.n_symbols);
    c.normalization_symbols = j.value("normalization_symbols", c.normalization_symbols);
    c.guard_symbols = j.value("guard_symbols", c.guard_symbols);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.edi_windows = j.at("edi_windows").get<std::vector<std::size_t>>();
    const auto mode = j.value("edi_mode", std::string("concatenated"));
    if (mode == "concatenated") c.edi_concatenated = true;
    else if (mode == "blocks") c.edi_concatenated = false;
    else throw std::invalid_argument("unknown edi_mode '" + mode + "'");
    if (j.contains("acf")) {
        const auto& a = j.at("acf");
        c.acf.w = a.value("w", c.acf.w);
        c.acf.tau_max = a.value("tau_max", c.acf.tau_max);
        c.acf.n_spans = a.value("n_spans", c.acf.n_spans);
    }
    c.validate();
    return c;
}

inline json to_json(const ExperimentConfig& c) {
    json schemes = json::array();
    for (const auto& s : c.schemes) {
        json e{{"name", to_string(s.scheme)}};
        if (s.shaping) e["shaping"] = to_json(*s.shaping);
        schemes.push_back(std::move(e));
    }
    return json{{"schemes", schemes},
                {"link", to_json(c.link)},
                {"spans", c.spans},
                {"power_sweep_dbm", c.power_sweep_dbm},
                {"n_symbols", c.n_symbols},
                {"normalization_symbols", c.normalization_symbols},
                {"guard_symbols", c.guard_symbols},
                {"master_seed", c.master_seed},
                {"seeds", c.seeds},
                {"edi_windows", c.edi_windows},
                {"edi_mode", c.edi_concatenated ? "concatenated" : "blocks"},
                {"acf", {{"w", c.acf.w}, {"tau_max", c.acf.tau_max}, {"n_spans", c.acf.n_spans}}}};
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return config_from_json(json::parse(in));
}

// ---------------------------------------------------------------- shaping setup

/// Resolves a ShapingSpec into concrete constraints (calibrating E_max from
/// the rate when needed).
inline ShapingConstraints resolve_constraints(const ShapingSpec& s) {
    const AmplitudeAlphabet alphabet(s.alphabet);
    std::optional<FourthPowerRule> fourth;
    if (s.k_max_ratio) fourth = FourthPowerRule{*s.k_max_ratio};
    std::optional<BandRule> band;
    if (s.band_halfwidth) {
        BandRule r{*s.band_halfwidth, std::nullopt};
        if (s.band_slope) r.slope = std::pair<std::int64_t, std::int64_t>{std::llround(*s.band_slope * 1e6), 1000000};
        band = r;
    }
    if (s.target_rate) return calibrate_emax(alphabet, s.n, *s.target_rate, fourth, band);
    ShapingConstraints c;
    c.n = s.n;
    c.e_max = *s.e_max;
    if (fourth) c.k_max = fourth->k_max_for(c.e_max, s.n);
    if (band) c.band = band->band_for(c.e_max, s.n);
    return c;
}

inline json to_json(const ShapingTrellis& t) {
    const auto& c = t.constraints();
    json j{{"family", to_string(c.family())},
           {"n", c.n},
           {"e_max", c.e_max},
           {"total_count", t.total_count().str()},
           {"input_bits", t.input_bits()},
           {"states", t.state_count()}};
    if (c.k_max) j["k_max"] = *c.k_max;
    if (c.band)
        j["band"] = {{"slope_num", c.band->slope_num}, {"slope_den", c.band->slope_den},
                     {"half_width", c.band->half_width}};
    return j;
}

// ---------------------------------------------------------------- running

struct SweepRecord {
    Scheme scheme = Scheme::uniform;
    double power_dbm = 0.0;
    int n_spans = 1;
    std::uint64_t seed = 0;
    double snr_db = 0.0;
};

struct RunFailure {
    Scheme scheme;
    double power_dbm;
    int n_spans;
    std::uint64_t seed;
    std::string message;
};

struct RunOptions {
    std::size_t workers = 1;
    bool force_noiseless = false;
};

struct RunResult {
    std::vector<SweepRecord> records;
    std::vector<RunFailure> failures;
    std::filesystem::path out_dir;
};

namespace detail {

inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? std::string("inf") : std::string("-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Builds a scheme's transmit stream (unnormalized) for one seed.
class SchemeSource {
public:
    SchemeSource(const SchemeSpec& spec, std::uint64_t master_seed) : spec_(spec), master_(master_seed) {
        if (spec.shaping)
            trellis_.emplace(build_trellis(AmplitudeAlphabet(spec.shaping->alphabet), resolve_constraints(*spec.shaping)));
    }

    Scheme scheme() const { return spec_.scheme; }
    const std::optional<ShapingTrellis>& trellis() const { return trellis_; }
    std::size_t block_symbols() const { return trellis_ ? trellis_->length() / 2 : 0; }

    ComplexSymbolFrame stream(std::uint64_t seed, std::size_t n_symbols) const {
        const std::string tag = to_string(spec_.scheme);
        if (!trellis_) {
            Rng rng = make_rng(derive_seed(master_, tag + "/qam", seed));
            return generate_uniform_frame(n_symbols, rng);
        }
        return generate_shaped_stream(*trellis_, spec_.scheme, n_symbols, derive_seed(master_, tag + "/index", seed),
                                      derive_seed(master_, tag + "/sign", seed));
    }

private:
    SchemeSpec spec_;
    std::uint64_t master_;
    std::optional<ShapingTrellis> trellis_;
};

inline constexpr std::uint64_t calibration_seed = 0xCA11B7A7E;

template <class Task>
void run_pool(std::size_t count, std::size_t workers, Task&& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next++; i < count; i = next++) task(i);
    };
    if (workers == 1) {
        body();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
}

struct Link {
    ComplexSymbolFrame tx;
    ComplexSymbolFrame rx;
};

/// TX -> fiber -> RX for one cell; tx is already power-normalized.
inline ComplexSymbolFrame simulate(const ComplexSymbolFrame& tx, const LinkConfig& link, std::uint64_t ase_seed) {
    Rng ase = make_rng(ase_seed);
    const auto wave = rrc_shape(tx, link);
    const auto rx = ssfm_propagate(wave, link, ase);
    return receiver_chain(rx, tx, link);
}

inline std::uint64_t ase_seed(std::uint64_t master, int n_spans, std::size_t power_index, std::uint64_t seed) {
    return derive_seed(master, "ase/" + std::to_string(n_spans), power_index * 1000003u + seed);
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

} // namespace detail

/// Runs the full sweep and writes snr_sweep.csv, edi.csv, acf.csv,
/// moments.csv and manifest.json into out_dir.
inline RunResult run(const ExperimentConfig& cfg_in, const std::filesystem::path& out_dir, RunOptions opts = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_in;
    if (opts.force_noiseless) cfg.link.noiseless = true;
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    // schemes sorted so every output is in a fixed order
    std::vector<SchemeSpec> specs = cfg.schemes;
    std::sort(specs.begin(), specs.end(), [](const auto& a, const auto& b) { return a.scheme < b.scheme; });
    std::vector<detail::SchemeSource> sources;
    for (const auto& s : specs) sources.emplace_back(s, cfg.master_seed);

    // per-scheme normalization, EDI and moments on a long calibration stream
    std::vector<double> mean_energy(sources.size());
    std::ostringstream edi_csv, moments_csv;
    edi_csv << "scheme,window,psi\n";
    moments_csv << "scheme,mean_energy,energy_variance,kurtosis_ratio,mean_fourth_sum\n";
    json scheme_meta = json::object();
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto& src = sources[i];
        auto stream = src.stream(detail::calibration_seed, std::max(cfg.normalization_symbols, cfg.n_symbols));
        std::vector<ComplexSymbolFrame> blocks =
            src.block_symbols() ? split_frames(stream, src.block_symbols()) : split_frames(stream, 54);
        const auto m = moments(std::span<const ComplexSymbolFrame>(blocks));
        mean_energy[i] = mean_symbol_energy(std::span<const ComplexSymbolFrame>(&stream, 1));
        moments_csv << to_string(src.scheme()) << ',' << detail::fmt(m.mean_energy) << ','
                    << detail::fmt(m.energy_variance) << ',' << detail::fmt(m.kurtosis_ratio) << ','
                    << detail::fmt(m.mean_fourth_sum) << '\n';

        normalize_power(stream, mean_energy[i]);
        std::vector<ComplexSymbolFrame> edi_frames;
        if (cfg.edi_concatenated) edi_frames.push_back(stream);
        else edi_frames = split_frames(stream, src.block_symbols() ? src.block_symbols() : 54);
        for (auto w : cfg.edi_windows) {
            if (!cfg.edi_concatenated && w + 1 > edi_frames.front().size()) continue;
            const auto r = edi(std::span<const ComplexSymbolFrame>(edi_frames), w);
            edi_csv << to_string(src.scheme()) << ',' << w << ',' << detail::fmt(r.psi) << '\n';
        }
        json meta{{"normalization_mean_energy", mean_energy[i]}};
        if (src.trellis()) meta["trellis"] = to_json(*src.trellis());
        scheme_meta[to_string(src.scheme())] = meta;
    }

    // sweep cells
    struct Cell {
        std::size_t scheme, power, seed;
        int spans;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < sources.size(); ++s)
        for (int sp : cfg.spans)
            for (std::size_t p = 0; p < cfg.power_sweep_dbm.size(); ++p)
                for (std::size_t k = 0; k < cfg.seeds.size(); ++k) cells.push_back({s, p, k, sp});

    std::vector<std::optional<SweepRecord>> results(cells.size());
    std::vector<std::optional<std::string>> errors(cells.size());
    const std::size_t g = cfg.guard_symbols;
    const std::size_t interior = cfg.n_symbols - 2 * g;
    detail::run_pool(cells.size(), opts.workers, [&](std::size_t i) {
        const auto& c = cells[i];
        try {
            auto tx = sources[c.scheme].stream(cfg.seeds[c.seed], cfg.n_symbols);
            normalize_power(tx, mean_energy[c.scheme]);
            LinkConfig link = cfg.link;
            link.n_spans = c.spans;
            link.launch_power_dbm = cfg.power_sweep_dbm[c.power];
            const auto y =
                detail::simulate(tx, link, detail::ase_seed(cfg.master_seed, c.spans, c.power, cfg.seeds[c.seed]));
            const double snr = estimate_effective_snr(std::span<const cplx>(tx.symbols).subspan(g, interior),
                                                      std::span<const cplx>(y.symbols).subspan(g, interior));
            results[i] = SweepRecord{sources[c.scheme].scheme(), link.launch_power_dbm, c.spans, cfg.seeds[c.seed], snr};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    RunResult out;
    out.out_dir = out_dir;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (results[i]) out.records.push_back(*results[i]);
        else
            out.failures.push_back({sources[c.scheme].scheme(), cfg.power_sweep_dbm[c.power], c.spans,
                                    cfg.seeds[c.seed], errors[i].value_or("unknown error")});
    }
    std::sort(out.records.begin(), out.records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.scheme, a.n_spans, a.power_dbm, a.seed) < std::tie(b.scheme, b.n_spans, b.power_dbm, b.seed);
    });

    std::ostringstream snr_csv;
    snr_csv << "scheme,power_dbm,n_spans,seed,snr_db\n";
    for (const auto& r : out.records)
        snr_csv << to_string(r.scheme) << ',' << detail::fmt(r.power_dbm) << ',' << r.n_spans << ',' << r.seed << ','
                << detail::fmt(std::min(r.snr_db, snr_cap_db)) << '\n';

    // ACF at each scheme's optimum power, averaged over seeds
    std::ostringstream acf_csv;
    acf_csv << "scheme,n_spans,power_dbm,tau,r_theta\n";
    json optimum = json::object();
    for (std::size_t s = 0; s < sources.size(); ++s) {
        std::optional<std::size_t> best;
        double best_snr = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < cfg.power_sweep_dbm.size(); ++p) {
            double acc = 0.0;
            std::size_t cnt = 0;
            for (const auto& r : out.records)
                if (r.scheme == sources[s].scheme() && r.n_spans == cfg.acf.n_spans &&
                    r.power_dbm == cfg.power_sweep_dbm[p]) {
                    acc += std::min(r.snr_db, snr_cap_db);
                    ++cnt;
                }
            if (cnt == cfg.seeds.size() && acc / static_cast<double>(cnt) > best_snr) {
                best_snr = acc / static_cast<double>(cnt);
                best = p;
            }
        }
        if (!best) continue;
        std::vector<std::vector<double>> per_seed(cfg.seeds.size());
        try {
            detail::run_pool(cfg.seeds.size(), opts.workers, [&](std::size_t k) {
                auto tx = sources[s].stream(cfg.seeds[k], cfg.n_symbols);
                normalize_power(tx, mean_energy[s]);
                LinkConfig link = cfg.link;
                link.n_spans = cfg.acf.n_spans;
                link.launch_power_dbm = cfg.power_sweep_dbm[*best];
                const auto y =
                    detail::simulate(tx, link, detail::ase_seed(cfg.master_seed, link.n_spans, *best, cfg.seeds[k]));
                const auto theta = moving_window_angle(std::span<const cplx>(tx.symbols).subspan(g, interior),
                                                       std::span<const cplx>(y.symbols).subspan(g, interior), cfg.acf.w);
                per_seed[k] = acf(theta, cfg.acf.tau_max, cfg.acf.w).r;
            });
        } catch (const std::exception& e) {
            out.failures.push_back({sources[s].scheme(), cfg.power_sweep_dbm[*best], cfg.acf.n_spans, 0,
                                    std::string("acf: ") + e.what()});
            continue;
        }
        optimum[to_string(sources[s].scheme())] = cfg.power_sweep_dbm[*best];
        for (std::size_t tau = 0; tau <= cfg.acf.tau_max; ++tau) {
            double r = 0.0;
            for (const auto& v : per_seed) r += v[tau];
            r /= static_cast<double>(per_seed.size());
            acf_csv << to_string(sources[s].scheme()) << ',' << cfg.acf.n_spans << ','
                    << detail::fmt(cfg.power_sweep_dbm[*best]) << ',' << tau << ',' << detail::fmt(r) << '\n';
        }
    }

    detail::write_text(out_dir / "snr_sweep.csv", snr_csv.str());
    detail::write_text(out_dir / "edi.csv", edi_csv.str());
    detail::write_text(out_dir / "acf.csv", acf_csv.str());
    detail::write_text(out_dir / "moments.csv", moments_csv.str());

    json failures = json::array();
    for (const auto& f : out.failures)
        failures.push_back({{"scheme", to_string(f.scheme)}, {"power_dbm", f.power_dbm}, {"n_spans", f.n_spans},
                            {"seed", f.seed}, {"error", f.message}});
    json seeds = json::object();
    for (const auto& src : sources) {
        const std::string tag = to_string(src.scheme());
        json per = json::array();
        for (auto s : cfg.seeds) {
            json e{{"seed", s}};
            if (src.trellis()) {
                e["index_seed"] = derive_seed(cfg.master_seed, tag + "/index", s);
                e["sign_seed"] = derive_seed(cfg.master_seed, tag + "/sign", s);
            } else {
                e["qam_seed"] = derive_seed(cfg.master_seed, tag + "/qam", s);
            }
            per.push_back(e);
        }
        seeds[tag] = per;
    }
    const json manifest{
        {"tool", "esslab"},
        {"version", version},
        {"rng", std::string(rng_name)},
        {"seed_rule", "child = splitmix64(splitmix64(parent ^ fnv1a(label)) ^ splitmix64(index + 1)); "
                      "labels <scheme>/index, <scheme>/sign, <scheme>/qam, ase/<spans> with index "
                      "power_index * 1000003 + seed"},
        {"config", to_json(cfg)},
        {"schemes", scheme_meta},
        {"seeds", seeds},
        {"acf_optimum_power_dbm", optimum},
        {"failures", failures},
        {"wall_clock_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()}};
    detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------- summarizing

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("CSV missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline CsvTable read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw std::runtime_error(p.string() + " is empty");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw std::runtime_error("malformed row in " + p.string() + ": " + line);
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct Criterion {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline double to_d(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

} // namespace detail

/// Reads a finished run directory and checks the qualitative orderings.
/// Throws on missing inputs; returns the verdict JSON (criteria + data).
inline json summarize(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("missing manifest.json in " + dir.string());
    const json manifest = json::parse(mf);
    const auto cfg = config_from_json(manifest.at("config"));

    const auto snr = read_csv(dir / "snr_sweep.csv");
    const auto edi_t = read_csv(dir / "edi.csv");
    const auto acf_t = read_csv(dir / "acf.csv");
    const auto mom = read_csv(dir / "moments.csv");
    if (edi_t.rows.empty()) throw std::runtime_error("edi.csv has no rows");

    std::vector<std::string> schemes;
    for (const auto& s : cfg.schemes) schemes.push_back(to_string(s.scheme));
    std::sort(schemes.begin(), schemes.end(),
              [](const auto& a, const auto& b) { return scheme_from_string(a) < scheme_from_string(b); });

    // (scheme, spans, power) -> snr values
    std::map<std::tuple<std::string, int, double>, std::vector<double>> cells;
    {
        const auto cs = snr.column("scheme"), cp = snr.column("power_dbm"), cn = snr.column("n_spans"),
                   cv = snr.column("snr_db");
        for (const auto& r : snr.rows)
            cells[{r[cs], std::stoi(r[cn]), detail::to_d(r[cp])}].push_back(detail::to_d(r[cv]));
    }
    std::vector<std::string> missing;
    for (const auto& s : schemes)
        for (int sp : cfg.spans)
            for (double p : cfg.power_sweep_dbm)
                if (!cells.count({s, sp, p}))
                    missing.push_back(s + "@" + detail::fmt(p) + "dBm/" + std::to_string(sp) + "span");
    if (!missing.empty()) throw std::runtime_error("snr_sweep.csv lacks cells: " + detail::join(missing, ", "));

    struct Opt {
        double power, mean, se;
    };
    std::map<std::pair<std::string, int>, Opt> opt;
    json snr_json = json::object();
    for (int sp : cfg.spans) {
        json per = json::object();
        for (const auto& s : schemes) {
            Opt best{0, -std::numeric_limits<double>::infinity(), 0};
            for (double p : cfg.power_sweep_dbm) {
                const auto& v = cells.at({s, sp, p});
                double m = 0.0;
                for (double x : v) m += x;
                m /= static_cast<double>(v.size());
                double var = 0.0;
                for (double x : v) var += (x - m) * (x - m);
                const double se = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1) /
                                                           static_cast<double>(v.size()))
                                               : 0.0;
                if (m > best.mean) best = {p, m, se};
            }
            opt[{s, sp}] = best;
            per[s] = {{"power_dbm", best.power}, {"snr_db", best.mean}, {"se_db", best.se}};
        }
        snr_json[std::to_string(sp)] = per;
    }

    std::map<std::pair<std::string, std::size_t>, double> psi;
    {
        const auto cs = edi_t.column("scheme"), cw = edi_t.column("window"), cp = edi_t.column("psi");
        for (const auto& r : edi_t.rows) psi[{r[cs], std::stoul(r[cw])}] = detail::to_d(r[cp]);
    }
    std::map<std::string, std::vector<double>> acf_r;
    {
        const auto cs = acf_t.column("scheme"), ct = acf_t.column("tau"), cr = acf_t.column("r_theta");
        for (const auto& r : acf_t.rows) {
            auto& v = acf_r[r[cs]];
            const auto tau = std::stoul(r[ct]);
            if (v.size() <= tau) v.resize(tau + 1, 0.0);
            v[tau] = detail::to_d(r[cr]);
        }
    }
    std::map<std::string, std::map<std::string, double>> moments_by;
    for (const auto& r : mom.rows)
        for (std::size_t c = 1; c < mom.header.size(); ++c) moments_by[r[mom.column("scheme")]][mom.header[c]] = detail::to_d(r[c]);

    std::vector<Criterion> crit;
    auto has = [&](const std::string& s) { return std::find(schemes.begin(), schemes.end(), s) != schemes.end(); };
    const bool all4 = has("uniform") && has("ess") && has("kess") && has("bess");

    auto ranked = [&](auto value, bool descending) {
        std::vector<std::string> order = schemes;
        std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            return descending ? value(a) > value(b) : value(a) < value(b);
        });
        return order;
    };

    // SNR orderings at optimum power
    for (int sp : cfg.spans) {
        if (!all4) break;
        auto gap = [&](const std::string& hi, const std::string& lo, std::string& why) {
            const auto& a = opt.at({hi, sp});
            const auto& b = opt.at({lo, sp});
            const double margin = 3.0 * std::hypot(a.se, b.se);
            const double d = a.mean - b.mean;
            why += hi + "-" + lo + "=" + detail::fmt(d) + "dB (need >" + detail::fmt(margin) + "); ";
            return d > margin;
        };
        std::string why;
        const bool ok1 = gap("bess", "uniform", why);
        const bool ok2 = gap("uniform", "ess", why);
        const bool ok3 = gap("kess", "ess", why);
        crit.push_back({"snr_ordering_" + std::to_string(sp) + "span", ok1 && ok2 && ok3, why});
    }

    // EDI at W*=30 / 150 against 1 / 4 span SNR rankings
    const std::vector<std::pair<std::size_t, int>> wstar{{30, 1}, {150, 4}};
    for (const auto& [w, sp] : wstar) {
        if (std::find(cfg.spans.begin(), cfg.spans.end(), sp) == cfg.spans.end()) continue;
        bool have_all = true;
        for (const auto& s : schemes) have_all &= psi.count({s, w}) > 0;
        if (!have_all) {
            crit.push_back({"edi_reverses_snr_W" + std::to_string(w), false, "EDI not computed at this window"});
            continue;
        }
        const auto by_edi = ranked([&](const std::string& s) { return psi.at({s, w}); }, false);
        const auto by_snr = ranked([&](const std::string& s) { return opt.at({s, sp}).mean; }, true);
        crit.push_back({"edi_reverses_snr_W" + std::to_string(w), by_edi == by_snr,
                        "EDI ascending: " + detail::join(by_edi, "<") + "; SNR(" + std::to_string(sp) +
                            " span) descending: " + detail::join(by_snr, ">")});
    }

    // B-ESS smallest EDI for W in [N/2, N]
    if (has("bess")) {
        std::size_t n_amp = 0;
        for (const auto& s : cfg.schemes)
            if (s.scheme == Scheme::bess) n_amp = s.shaping->n;
        bool ok = true;
        std::size_t checked = 0;
        std::string why;
        for (auto w : cfg.edi_windows) {
            if (w < n_amp / 2 || w > n_amp) continue;
            ++checked;
            for (const auto& s : schemes)
                if (s != "bess" && !(psi.at({"bess", w}) < psi.at({s, w}))) {
                    ok = false;
                    why += "W=" + std::to_string(w) + ": " + s + " <= bess; ";
                }
        }
        if (checked == 0) {
            ok = false;
            why = "no EDI window inside [N/2, N]";
        } else if (ok) {
            why = std::to_string(checked) + " windows checked in [" + std::to_string(n_amp / 2) + ", " +
                  std::to_string(n_amp) + "]";
        }
        crit.push_back({"bess_smallest_edi_near_N", ok, why});
    }

    // ACF decay over tau in [w+1, 3w]
    json acf_json = json::object();
    if (has("bess") && acf_r.count("bess")) {
        const std::size_t lo = cfg.acf.w + 1, hi = 3 * cfg.acf.w;
        auto decay = [&](const std::string& s) {
            const auto& v = acf_r.at(s);
            if (v.size() <= hi) throw std::runtime_error("acf.csv too short for lag " + std::to_string(hi));
            double m = 0.0;
            for (std::size_t t = lo; t <= hi; ++t) m += std::abs(v[t]);
            return m / static_cast<double>(hi - lo + 1);
        };
        bool ok = true;
        std::string why;
        for (const auto& s : schemes) {
            if (!acf_r.count(s)) {
                ok = false;
                why += s + " missing; ";
                continue;
            }
            acf_json[s] = decay(s);
            why += s + "=" + detail::fmt(decay(s)) + " ";
            if (s != "bess" && !(decay("bess") < decay(s))) ok = false;
        }
        crit.push_back({"acf_bess_decays_fastest", ok,
                        "mean|R| over tau in [" + std::to_string(lo) + "," + std::to_string(hi) + "]: " + why});
    }

    // average statistics: K-ESS better on moments, worse on SNR
    if (has("kess") && has("bess")) {
        const auto& k = moments_by.at("kess");
        const auto& b = moments_by.at("bess");
        bool ok = k.at("mean_energy") < b.at("mean_energy") && k.at("energy_variance") < b.at("energy_variance") &&
                  k.at("kurtosis_ratio") < b.at("kurtosis_ratio");
        for (int sp : cfg.spans) ok &= opt.at({"kess", sp}).mean < opt.at({"bess", sp}).mean;
        crit.push_back({"kess_better_moments_lower_snr", ok,
                        "kess(E,var,kurt)=(" + detail::fmt(k.at("mean_energy")) + "," +
                            detail::fmt(k.at("energy_variance")) + "," + detail::fmt(k.at("kurtosis_ratio")) +
                            ") bess=(" + detail::fmt(b.at("mean_energy")) + "," +
                            detail::fmt(b.at("energy_variance")) + "," + detail::fmt(b.at("kurtosis_ratio")) + ")"});
    }

    json criteria = json::array();
    bool all_pass = !crit.empty();
    for (const auto& c : crit) {
        criteria.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        all_pass &= c.pass;
    }
    return json{{"pass", all_pass}, {"criteria", criteria}, {"snr_at_optimum", snr_json}, {"acf_decay", acf_json}};
}

} // namespace esslab
