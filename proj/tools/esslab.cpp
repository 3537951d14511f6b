// esslab command line: run / summarize experiments, and encode / decode
// amplitude blocks through a shaping trellis.

#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esslab/experiment.hpp"

namespace {

using namespace esslab;

struct TrellisArgs {
    std::string config;
    std::string scheme;
    std::size_t n = 108;
    std::vector<int> alphabet{1, 3, 5, 7};
    double rate = 0.0;
    std::int64_t e_max = 0;
    double k_max_ratio = 0.0;
    std::int64_t band_halfwidth = -1;
};

void add_trellis_options(CLI::App* cmd, TrellisArgs& a) {
    cmd->add_option("--config", a.config, "experiment config to take the shaping parameters from");
    cmd->add_option("--scheme", a.scheme, "scheme name inside --config (ess, kess, bess)");
    cmd->add_option("--n", a.n, "block length in amplitudes");
    cmd->add_option("--alphabet", a.alphabet, "amplitude levels")->delimiter(',');
    cmd->add_option("--rate", a.rate, "target rate in bits per amplitude (calibrates E_max)");
    cmd->add_option("--e-max", a.e_max, "strict energy bound");
    cmd->add_option("--k-max-ratio", a.k_max_ratio, "K_max = ratio * E_max^2 / n");
    cmd->add_option("--band-halfwidth", a.band_halfwidth, "cumulative-energy band half-width");
}

ShapingTrellis make_trellis(const TrellisArgs& a) {
    ShapingSpec spec;
    if (!a.config.empty()) {
        const auto cfg = load_config(a.config);
        bool found = false;
        for (const auto& s : cfg.schemes)
            if (to_string(s.scheme) == a.scheme && s.shaping) {
                spec = *s.shaping;
                found = true;
            }
        if (!found) throw std::invalid_argument("scheme '" + a.scheme + "' with shaping not found in " + a.config);
    } else {
        spec.n = a.n;
        spec.alphabet = a.alphabet;
        spec.target_rate.reset();
        if (a.rate > 0.0) spec.target_rate = a.rate;
        if (a.e_max > 0) spec.e_max = a.e_max;
        if (spec.target_rate.has_value() == spec.e_max.has_value())
            throw std::invalid_argument("give exactly one of --rate or --e-max");
        if (a.k_max_ratio > 0.0) spec.k_max_ratio = a.k_max_ratio;
        if (a.band_halfwidth >= 0) spec.band_halfwidth = a.band_halfwidth;
    }
    return build_trellis(AmplitudeAlphabet(spec.alphabet), resolve_constraints(spec));
}

count_t parse_hex(std::string s) {
    if (s.rfind("0x", 0) == 0 || s.rfind("0X", 0) == 0) s = s.substr(2);
    if (s.empty()) throw std::invalid_argument("empty hex index");
    count_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
        v = v * 16 + d;
    }
    return v;
}

std::string to_hex(const count_t& v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Enumerative shaping and fiber temporal-metrics laboratory"};
    app.set_version_flag("--version", std::string(esslab::version));
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir;
    std::size_t workers = 1;
    bool noiseless = false;
    auto* run_cmd = app.add_subcommand("run", "run a launch-power sweep and write CSV results");
    run_cmd->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_dir, "output directory")->required();
    run_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--noiseless", noiseless, "disable ASE noise");

    auto* sum_cmd = app.add_subcommand("summarize", "check orderings of a finished run");
    sum_cmd->add_option("--in", in_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    TrellisArgs enc_args, dec_args;
    std::string hex_index;
    auto* enc_cmd = app.add_subcommand("encode", "hex index -> space-separated amplitudes");
    add_trellis_options(enc_cmd, enc_args);
    enc_cmd->add_option("index", hex_index, "index in hexadecimal")->required();

    std::vector<int> amplitudes;
    auto* dec_cmd = app.add_subcommand("decode", "amplitudes -> hex index");
    add_trellis_options(dec_cmd, dec_args);
    dec_cmd->add_option("amplitudes", amplitudes, "amplitudes (read from stdin when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto cfg = esslab::load_config(config_path);
            const auto result = esslab::run(cfg, out_dir, {workers, noiseless});
            std::cerr << result.records.size() << " runs written to " << out_dir;
            if (!result.failures.empty()) {
                std::cerr << ", " << result.failures.size() << " failed:\n";
                for (const auto& f : result.failures)
                    std::cerr << "  " << esslab::to_string(f.scheme) << " " << f.power_dbm << " dBm " << f.n_spans
                              << " span(s) seed " << f.seed << ": " << f.message << "\n";
                return 1;
            }
            std::cerr << "\n";
            return 0;
        }
        if (*sum_cmd) {
            const auto verdict = esslab::summarize(in_dir);
            std::cout << verdict.dump(2) << "\n";
            return verdict.at("pass").get<bool>() ? 0 : 2;
        }
        if (*enc_cmd) {
            const auto trellis = make_trellis(enc_args);
            const auto seq = esslab::encode_index(trellis, parse_hex(hex_index));
            for (std::size_t i = 0; i < seq.size(); ++i) std::cout << (i ? " " : "") << seq[i];
            std::cout << "\n";
            return 0;
        }
        if (*dec_cmd) {
            const auto trellis = make_trellis(dec_args);
            if (amplitudes.empty())
                amplitudes.assign(std::istream_iterator<int>(std::cin), std::istream_iterator<int>());
            std::cout << to_hex(esslab::decode_sequence(trellis, amplitudes)) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
