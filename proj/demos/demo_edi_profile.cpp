// Energy dispersion index against window length for uniform 64-QAM and the
// three shaped schemes, printed as a table.

#include <cstdio>
#include <vector>

#include "esslab/metrics.hpp"

int main() {
    using namespace esslab;
    const auto alphabet = AmplitudeAlphabet::ask(4);
    const std::size_t n = 108, symbols = 1u << 16;
    const std::vector<std::size_t> windows{10, 30, 54, 108, 150, 300};

    std::vector<std::pair<const char*, ComplexSymbolFrame>> streams;
    Rng rng = make_rng(1);
    streams.emplace_back("uniform", generate_uniform_frame(symbols, rng));
    const auto ess = build_trellis(alphabet, calibrate_emax(alphabet, n, 1.5));
    streams.emplace_back("ess", generate_shaped_stream(ess, Scheme::ess, symbols, 2, 3));
    const auto kess = build_trellis(alphabet, calibrate_emax(alphabet, n, 1.5, FourthPowerRule{2.3}));
    streams.emplace_back("kess", generate_shaped_stream(kess, Scheme::kess, symbols, 2, 3));
    const auto bess = build_trellis(alphabet, calibrate_emax(alphabet, n, 1.5, std::nullopt, BandRule{49, std::nullopt}));
    streams.emplace_back("bess", generate_shaped_stream(bess, Scheme::bess, symbols, 2, 3));

    std::printf("%-8s", "W");
    for (const auto& [name, _] : streams) std::printf("%10s", name);
    std::printf("\n");
    for (auto& [name, s] : streams) normalize_power(s, mean_symbol_energy(std::span<const ComplexSymbolFrame>(&s, 1)));
    for (auto w : windows) {
        std::printf("%-8zu", w);
        for (const auto& [name, s] : streams) std::printf("%10.4f", edi(s, w).psi);
        std::printf("\n");
    }
}
