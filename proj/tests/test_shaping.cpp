#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "esslab/shaping.hpp"
#include "oracle.hpp"

using namespace esslab;

namespace {

ShapingConstraints ess(std::size_t n, std::int64_t e_max) {
    ShapingConstraints c;
    c.n = n;
    c.e_max = e_max;
    return c;
}

std::vector<AmplitudeSequence> all_sequences(const ShapingTrellis& t) {
    std::vector<AmplitudeSequence> out;
    for (count_t i = 0; i < t.total_count(); ++i) out.push_back(encode_index(t, i));
    return out;
}

oracle::Constraints to_oracle(const ShapingConstraints& c) {
    oracle::Constraints o{c.n, c.e_max, c.k_max, std::nullopt, std::nullopt, std::nullopt};
    if (c.band) {
        o.slope_num = c.band->slope_num;
        o.slope_den = c.band->slope_den;
        o.half_width = c.band->half_width;
    }
    return o;
}

} // namespace

TEST(Alphabet, RejectsMalformedLevels) {
    EXPECT_THROW(AmplitudeAlphabet({1}), std::invalid_argument);
    EXPECT_THROW(AmplitudeAlphabet({1, 2}), std::invalid_argument);
    EXPECT_THROW(AmplitudeAlphabet({3, 1}), std::invalid_argument);
    EXPECT_THROW(AmplitudeAlphabet({-1, 1}), std::invalid_argument);
    const auto a = AmplitudeAlphabet::ask(4);
    EXPECT_EQ(a.values(), (std::vector<int>{1, 3, 5, 7}));
    EXPECT_EQ(a.energy(3), 49);
    EXPECT_EQ(a.fourth_power(3), 2401);
}

TEST(BuildTrellis, EnergyBoundTwoByTwo) {
    const auto t = build_trellis(AmplitudeAlphabet({1, 3}), ess(2, 11));
    EXPECT_EQ(t.total_count(), 3);
    EXPECT_EQ(all_sequences(t), (std::vector<AmplitudeSequence>{{1, 1}, {1, 3}, {3, 1}}));
    EXPECT_EQ(t.constraints().family(), ShapingFamily::ess);
}

TEST(BuildTrellis, FourthPowerBoundExcludesPeakPair) {
    auto c = ess(2, 19);
    c.k_max = 83;
    const auto t = build_trellis(AmplitudeAlphabet({1, 3}), c);
    EXPECT_EQ(t.total_count(), 3);
    EXPECT_EQ(all_sequences(t), (std::vector<AmplitudeSequence>{{1, 1}, {1, 3}, {3, 1}}));
    EXPECT_EQ(c.family(), ShapingFamily::kess);
}

TEST(BuildTrellis, BandEnforcedThroughFinalPosition) {
    auto c = ess(2, 11);
    c.band = EnergyBand{5, 1, 4};
    const auto t = build_trellis(AmplitudeAlphabet({1, 3}), c);
    EXPECT_EQ(t.total_count(), 2);
    EXPECT_EQ(all_sequences(t), (std::vector<AmplitudeSequence>{{1, 3}, {3, 1}}));
    EXPECT_EQ(c.family(), ShapingFamily::bess);
}

TEST(BuildTrellis, InactiveFourthPowerBoundMatchesEssLayerByLayer) {
    const auto a = AmplitudeAlphabet::ask(4);
    const auto plain = build_trellis(a, ess(6, 120));
    auto c = ess(6, 120);
    c.k_max = 6 * 2401 + 1;
    const auto loose = build_trellis(a, c);
    ASSERT_EQ(plain.total_count(), loose.total_count());
    // the fourth-power coordinate splits states but never changes a completion count
    for (std::size_t k = 0; k <= 6; ++k) {
        std::map<std::int64_t, count_t> by_energy;
        for (const auto& [s, n] : plain.layer(k)) by_energy[s.energy] = n;
        std::set<std::int64_t> seen;
        for (const auto& [s, n] : loose.layer(k)) {
            ASSERT_TRUE(by_energy.count(s.energy)) << "layer " << k;
            EXPECT_EQ(by_energy.at(s.energy), n) << "layer " << k;
            seen.insert(s.energy);
        }
        EXPECT_EQ(seen.size(), by_energy.size()) << "layer " << k;
    }
}

TEST(BuildTrellis, EmptyTrellisReportsFirstDeadPosition) {
    auto c = ess(3, 100);
    c.band = EnergyBand{3, 2, 1}; // C_1 = 1 and C_2 = 2 fit, no C_3 in [3.5, 5.5]
    try {
        build_trellis(AmplitudeAlphabet({1, 3}), c);
        FAIL() << "expected empty_trellis_error";
    } catch (const empty_trellis_error& e) {
        EXPECT_EQ(e.position(), 3u);
    }
    EXPECT_THROW(build_trellis(AmplitudeAlphabet({1, 3}), ess(2, 2)), std::invalid_argument);
}

TEST(CountSequences, Examples) {
    EXPECT_EQ(count_sequences(build_trellis(AmplitudeAlphabet::ask(4), ess(1, 50))), 4);
    EXPECT_EQ(count_sequences(build_trellis(AmplitudeAlphabet::ask(4), ess(4, 28))), 11);
    EXPECT_EQ(count_sequences(build_trellis(AmplitudeAlphabet({1, 3}), ess(2, 11))), 3);
}

TEST(EncodeDecode, ExamplesAndBoundaries) {
    const auto t = build_trellis(AmplitudeAlphabet({1, 3}), ess(2, 11));
    EXPECT_EQ(encode_index(t, 0), (AmplitudeSequence{1, 1}));
    EXPECT_EQ(encode_index(t, 1), (AmplitudeSequence{1, 3}));
    EXPECT_EQ(encode_index(t, 2), (AmplitudeSequence{3, 1}));
    EXPECT_THROW(encode_index(t, 3), std::out_of_range);
    EXPECT_THROW(encode_index(t, -1), std::out_of_range);

    const AmplitudeSequence s13{1, 3};
    EXPECT_EQ(decode_sequence(t, s13), 1);
    const AmplitudeSequence s33{3, 3};
    try {
        decode_sequence(t, s33);
        FAIL() << "expected inadmissible_sequence_error";
    } catch (const inadmissible_sequence_error& e) {
        EXPECT_EQ(e.violation(), Violation::energy);
        EXPECT_EQ(e.position(), 1u);
    }
    const AmplitudeSequence wrong_level{1, 5};
    EXPECT_THROW(decode_sequence(t, wrong_level), inadmissible_sequence_error);
    const AmplitudeSequence too_short{1};
    EXPECT_THROW(decode_sequence(t, too_short), inadmissible_sequence_error);
}

TEST(EncodeDecode, BandAndFourthPowerViolationsNamed) {
    auto c = ess(2, 19);
    c.k_max = 83;
    const auto tk = build_trellis(AmplitudeAlphabet({1, 3}), c);
    const AmplitudeSequence s33{3, 3};
    try {
        decode_sequence(tk, s33);
        FAIL();
    } catch (const inadmissible_sequence_error& e) {
        EXPECT_EQ(e.violation(), Violation::fourth_power);
    }
    auto b = ess(2, 11);
    b.band = EnergyBand{5, 1, 4};
    const auto tb = build_trellis(AmplitudeAlphabet({1, 3}), b);
    const AmplitudeSequence s11{1, 1};
    try {
        decode_sequence(tb, s11);
        FAIL();
    } catch (const inadmissible_sequence_error& e) {
        EXPECT_EQ(e.violation(), Violation::band);
        EXPECT_EQ(e.position(), 1u);
    }
}

TEST(EncodeDecode, BitStringIsBigEndian) {
    const auto t = build_trellis(AmplitudeAlphabet::ask(4), ess(4, 28)); // 11 sequences -> 3 bits
    ASSERT_EQ(t.input_bits(), 3u);
    const std::vector<std::uint8_t> bits{1, 0, 1};
    EXPECT_EQ(encode_bits(t, bits), encode_index(t, 5));
    const std::vector<std::uint8_t> short_bits{1, 0};
    EXPECT_THROW(encode_bits(t, short_bits), std::invalid_argument);
}

TEST(EncodeDecode, ExhaustiveBijectionUpTo2To16) {
    const auto a = AmplitudeAlphabet::ask(4);
    for (std::int64_t e_max : {60, 150, 300}) {
        auto c = ess(8, e_max);
        const auto t = build_trellis(a, c);
        ASSERT_LE(t.total_count(), count_t(1) << 16);
        for (count_t i = 0; i < t.total_count(); ++i) {
            const auto s = encode_index(t, i);
            ASSERT_TRUE(is_admissible(a, c, s));
            ASSERT_EQ(decode_sequence(t, s), i);
        }
    }
}

TEST(Calibrate, SmallestEnergyBoundForRate) {
    const AmplitudeAlphabet a({1, 3});
    const auto c = calibrate_emax(a, 4, 0.5);
    EXPECT_EQ(c.e_max, 13);
    EXPECT_EQ(c.index_bits, 2u);
    EXPECT_EQ(build_trellis(a, c).total_count(), 5);
}

TEST(Calibrate, FullRateAdmitsWholeCube) {
    const AmplitudeAlphabet a({1, 3});
    const auto c = calibrate_emax(a, 4, 1.0);
    EXPECT_EQ(c.e_max, 4 * 9 + 1);
    EXPECT_EQ(build_trellis(a, c).total_count(), 16);
    EXPECT_THROW(calibrate_emax(a, 4, 1.01), std::invalid_argument);
}

TEST(Calibrate, DefaultBlockLengthCarries162Bits) {
    const auto a = AmplitudeAlphabet::ask(4);
    const auto c = calibrate_emax(a, 108, 1.5);
    EXPECT_EQ(c.index_bits, 162u);
    const auto t = build_trellis(a, c);
    EXPECT_GE(floor_log2(t.total_count()), 162u);
    // one achievable energy lower must fall short
    auto lower = c;
    lower.e_max -= 8;
    lower.index_bits.reset();
    EXPECT_LT(floor_log2(build_trellis(a, lower).total_count()), 162u);
    EXPECT_EQ(c.e_max, 861); // frozen from the trellis-count sweep
}

TEST(Calibrate, BandAndFourthPowerRules) {
    const auto a = AmplitudeAlphabet::ask(4);
    const auto b = calibrate_emax(a, 24, 1.5, std::nullopt, BandRule{49, std::nullopt});
    ASSERT_TRUE(b.band);
    EXPECT_EQ(b.band->slope_num, b.e_max - 1);
    EXPECT_EQ(b.band->slope_den, 24);
    EXPECT_GE(floor_log2(build_trellis(a, b).total_count()), 36u);
    const auto k = calibrate_emax(a, 24, 1.5, FourthPowerRule{2.3});
    ASSERT_TRUE(k.k_max);
    EXPECT_EQ(*k.k_max, FourthPowerRule{2.3}.k_max_for(k.e_max, 24));
    EXPECT_GE(floor_log2(build_trellis(a, k).total_count()), 36u);
}

// Random constraint draws per family against brute-force enumeration.
class OracleEquivalence : public ::testing::TestWithParam<ShapingFamily> {};

TEST_P(OracleEquivalence, CountsOrderAndConstraintsMatchBruteForce) {
    const ShapingFamily family = GetParam();
    std::mt19937_64 rng(0xE55 + static_cast<int>(family));
    const std::vector<int> full{1, 3, 5, 7};
    int draws = 0, nonempty = 0;
    while (draws < 200) {
        // alphabet: random subset of {1,3,5,7} with >= 2 levels
        std::vector<int> levels;
        for (int v : full)
            if (rng() & 1u) levels.push_back(v);
        if (levels.size() < 2) continue;
        const AmplitudeAlphabet a(levels);
        const std::size_t n = 1 + rng() % 6;
        std::size_t cube = 1;
        for (std::size_t i = 0; i < n; ++i) cube *= levels.size();
        const std::int64_t lo = static_cast<std::int64_t>(n) * a.min_energy() + 1;
        const std::int64_t hi = static_cast<std::int64_t>(n) * a.max_energy() + 1;
        ShapingConstraints c = ess(n, lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1)));
        if (family == ShapingFamily::kess) {
            const std::int64_t qlo = static_cast<std::int64_t>(n) * a.min_fourth_power() + 1;
            const std::int64_t qhi = static_cast<std::int64_t>(n) * a.max_energy() * a.max_energy() + 1;
            c.k_max = qlo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(qhi - qlo + 1));
        }
        if (family == ShapingFamily::bess) {
            c.band = EnergyBand{c.e_max - 1, static_cast<std::int64_t>(n),
                                static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(2 * a.max_energy() + 1))};
        }
        ++draws;
        const auto expected = oracle::enumerate(levels, to_oracle(c));
        if (expected.empty()) {
            EXPECT_THROW(build_trellis(a, c), empty_trellis_error);
            continue;
        }
        ++nonempty;
        const auto t = build_trellis(a, c);
        ASSERT_EQ(t.total_count(), expected.size()) << "n=" << n << " e_max=" << c.e_max << " cube=" << cube;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            const auto s = encode_index(t, i);
            ASSERT_EQ(s, expected[i]);
            ASSERT_TRUE(oracle::admissible(s, to_oracle(c)));
            ASSERT_EQ(decode_sequence(t, s), i);
        }
    }
    EXPECT_GT(nonempty, 100);
}

INSTANTIATE_TEST_SUITE_P(Families, OracleEquivalence,
                         ::testing::Values(ShapingFamily::ess, ShapingFamily::kess, ShapingFamily::bess),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Properties, CountMonotoneInEachBound) {
    const auto a = AmplitudeAlphabet::ask(4);
    auto count_or_zero = [&](const ShapingConstraints& c) -> count_t {
        try {
            return build_trellis(a, c).total_count();
        } catch (const empty_trellis_error&) {
            return 0;
        }
    };
    count_t prev = 0;
    for (std::int64_t e = 7; e < 300; e += 3) {
        const auto n = count_or_zero(ess(6, e));
        EXPECT_GE(n, prev);
        prev = n;
    }
    prev = 0;
    for (std::int64_t q = 7; q < 6 * 2401; q += 97) {
        auto c = ess(6, 200);
        c.k_max = q;
        const auto n = count_or_zero(c);
        EXPECT_GE(n, prev);
        prev = n;
    }
    prev = 0;
    for (std::int64_t b = 0; b < 120; ++b) {
        auto c = ess(6, 200);
        c.band = EnergyBand{199, 6, b};
        const auto n = count_or_zero(c);
        EXPECT_GE(n, prev);
        prev = n;
    }
}

TEST(Properties, BandAndFourthPowerSetsNestInsideEss) {
    const auto a = AmplitudeAlphabet::ask(4);
    const auto base = ess(5, 140);
    auto k = base;
    k.k_max = 3000;
    auto b = base;
    b.band = EnergyBand{139, 5, 30};
    for (const auto& c : {k, b}) {
        const auto t = build_trellis(a, c);
        for (const auto& s : all_sequences(t)) EXPECT_TRUE(is_admissible(a, base, s));
    }
}
