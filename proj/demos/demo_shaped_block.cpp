// Builds the N = 108 ESS trellis at 1.5 bit/amplitude, maps one random index
// to a 64-QAM block and back.

#include <iostream>

#include "esslab/pas.hpp"

int main() {
    using namespace esslab;
    const auto alphabet = AmplitudeAlphabet::ask(4);
    const auto constraints = calibrate_emax(alphabet, 108, 1.5);
    const auto trellis = build_trellis(alphabet, constraints);
    std::cout << "E_max " << constraints.e_max << ", " << trellis.total_count() << " sequences, "
              << trellis.input_bits() << " input bits, " << trellis.state_count() << " states\n";

    ShapedBlockSource source(trellis, 7);
    const count_t index = source.next_index();
    const auto amps = encode_index(trellis, index);
    long energy = 0;
    for (int a : amps) energy += a * a;
    std::cout << "index " << index << "\nenergy " << energy << "\namplitudes";
    for (int a : amps) std::cout << ' ' << a;
    std::cout << "\n";

    SignSource signs(8);
    const auto frame = map_to_qam(amps, signs.draw(amps.size()), Scheme::ess);
    std::cout << "first symbols";
    for (std::size_t j = 0; j < 4; ++j) std::cout << ' ' << frame.symbols[j];
    std::cout << "\nround trip " << (decode_sequence(trellis, amps) == index ? "ok" : "MISMATCH") << "\n";
}
