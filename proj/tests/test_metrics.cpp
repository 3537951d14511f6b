#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "esslab/metrics.hpp"

using namespace esslab;

namespace {

ComplexSymbolFrame frame_with_energies(const std::vector<double>& energies) {
    ComplexSymbolFrame f;
    for (double e : energies) f.symbols.emplace_back(std::sqrt(e), 0.0);
    return f;
}

ComplexSymbolFrame qpsk(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    ComplexSymbolFrame f;
    for (std::size_t i = 0; i < n; ++i) f.symbols.emplace_back((rng() & 1) ? 1.0 : -1.0, (rng() & 2) ? 1.0 : -1.0);
    return f;
}

// Expected population variance of m = n - W moving sums of W + 1 i.i.d.
// energies with variance s2: gamma(0) - Var(mean of G).
double expected_windowed_variance(std::size_t n, std::size_t w, double s2) {
    const double m = static_cast<double>(n - w);
    const auto span = static_cast<double>(w + 1);
    double var_mean = 0.0;
    for (long h = -static_cast<long>(w); h <= static_cast<long>(w); ++h) {
        const double gamma = (span - std::abs(static_cast<double>(h))) * s2;
        var_mean += (m - std::abs(static_cast<double>(h))) * gamma;
    }
    var_mean /= m * m;
    return span * s2 - var_mean;
}

} // namespace

TEST(WindowedEnergy, WindowHoldsWPlusOneSymbols) {
    const auto f = frame_with_energies({1, 2, 3, 4, 5});
    const auto g = windowed_energy(f, 2);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_NEAR(g[0], 6.0, 1e-12);
    EXPECT_NEAR(g[1], 9.0, 1e-12);
    EXPECT_NEAR(g[2], 12.0, 1e-12);

    const auto whole = windowed_energy(f, 4);
    ASSERT_EQ(whole.size(), 1u);
    EXPECT_NEAR(whole[0], 15.0, 1e-12);

    const auto c = frame_with_energies(std::vector<double>(40, 2.0));
    for (double v : windowed_energy(c, 10)) EXPECT_NEAR(v, 22.0, 1e-12);
}

TEST(WindowedEnergy, RejectsOddOrOversizedWindows) {
    const auto f = frame_with_energies({1, 2, 3, 4, 5});
    EXPECT_THROW(windowed_energy(f, 3), std::invalid_argument);
    EXPECT_THROW(windowed_energy(f, 6), std::invalid_argument);
}

TEST(WindowedEnergy, NoLeakageAcrossFrames) {
    Rng rng = make_rng(4);
    const auto a = generate_uniform_frame(100, rng);
    const auto b = generate_uniform_frame(80, rng);
    ComplexSymbolFrame cat = a;
    cat.symbols.insert(cat.symbols.end(), b.symbols.begin(), b.symbols.end());
    const std::size_t w = 10;
    const auto ga = windowed_energy(a, w), gb = windowed_energy(b, w), gc = windowed_energy(cat, w);
    for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_NEAR(gc[i], ga[i], 1e-9);
    for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_NEAR(gc[a.size() + i], gb[i], 1e-9);
}

TEST(Edi, ConstantEnvelopeIsExactlyZero) {
    const auto f = qpsk(5000, 1);
    for (std::size_t w : {2, 10, 30, 150, 300}) EXPECT_EQ(edi(f, w).psi, 0.0);
    std::vector<ComplexSymbolFrame> frames{qpsk(200, 2), qpsk(200, 3)};
    EXPECT_EQ(edi(std::span<const ComplexSymbolFrame>(frames), 30).psi, 0.0);
}

TEST(Edi, ScalesLinearlyWithPower) {
    Rng rng = make_rng(8);
    const auto f = generate_uniform_frame(20000, rng);
    auto g = f;
    for (auto& x : g.symbols) x *= 2.0;
    auto h = f;
    for (auto& x : h.symbols) x *= std::sqrt(3.0);
    for (std::size_t w : {4, 30, 150}) {
        const double base = edi(f, w).psi;
        EXPECT_EQ(edi(g, w).psi, 4.0 * base);
        EXPECT_NEAR(edi(h, w).psi, 3.0 * base, 1e-12 * base);
    }
}

TEST(Edi, AveragesVarianceAndMeanAcrossFrames) {
    const std::vector<ComplexSymbolFrame> frames{frame_with_energies({1, 1, 4, 4}), frame_with_energies({2, 2, 2, 8})};
    // W = 2: G = (6, 9) and (6, 12); variances 2.25 and 9, means 7.5 and 9
    const auto r = edi(std::span<const ComplexSymbolFrame>(frames), 2);
    EXPECT_NEAR(r.psi, (2.25 + 9.0) / 2.0 / ((7.5 + 9.0) / 2.0), 1e-12);
    EXPECT_THROW(edi(std::span<const ComplexSymbolFrame>(), 2), std::invalid_argument);
}

// Uniform 64-QAM: Psi = Var(|x|^2) / E|x|^2 = 672 / 42 = 16 for every W, up
// to the finite-length bias of the pooled variance (computed exactly above).
TEST(Edi, IidUniformQamIsFlatInWindow) {
    const std::size_t n = 1u << 16, replicas = 16;
    for (std::size_t w : {10, 30, 54, 108, 150, 200}) {
        std::vector<double> psi;
        for (std::size_t r = 0; r < replicas; ++r) {
            Rng rng = make_rng(1000 + r);
            psi.push_back(edi(generate_uniform_frame(n, rng), w).psi);
        }
        const double mean = std::accumulate(psi.begin(), psi.end(), 0.0) / replicas;
        double var = 0.0;
        for (double p : psi) var += (p - mean) * (p - mean);
        const double se = std::sqrt(var / (replicas - 1) / replicas);
        const double expected = expected_windowed_variance(n, w, 672.0) / ((w + 1) * 42.0);
        EXPECT_NEAR(mean, expected, 3.0 * se) << "W=" << w;
        EXPECT_NEAR(expected, 16.0, 0.1);
    }
}

TEST(MovingWindowAngle, IdentityAndRotation) {
    Rng rng = make_rng(3);
    const auto tx = generate_uniform_frame(300, rng);
    for (double v : moving_window_angle(tx, tx, 5)) EXPECT_EQ(v, 0.0);
    auto rx = tx;
    const double phi = 0.37;
    for (auto& y : rx.symbols) y *= std::polar(1.0, phi);
    const auto theta = moving_window_angle(tx, rx, 5);
    EXPECT_EQ(theta.size(), 296u);
    for (double v : theta) EXPECT_NEAR(v, phi, 1e-12);
}

TEST(MovingWindowAngle, Errors) {
    Rng rng = make_rng(3);
    const auto tx = generate_uniform_frame(30, rng);
    auto short_rx = tx;
    short_rx.symbols.pop_back();
    EXPECT_THROW(moving_window_angle(tx, short_rx, 5), std::invalid_argument);
    EXPECT_THROW(moving_window_angle(tx, tx, 4), std::invalid_argument);
    EXPECT_THROW(moving_window_angle(tx, tx, 31), std::invalid_argument);
}

TEST(Acf, NormalizedAndWhite) {
    const std::size_t n = 100000;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    std::vector<double> theta(n);
    for (auto& v : theta) v = g(rng);
    const auto r = acf(theta, 40, 5);
    EXPECT_EQ(r.r[0], 1.0);
    for (std::size_t t = 1; t <= 40; ++t) EXPECT_LT(std::abs(r.r[t]), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Acf, MovingAverageCorrelatesOnlyWithinWindow) {
    const std::size_t n = 100000, w = 5;
    std::mt19937_64 rng(78);
    std::normal_distribution<double> g;
    std::vector<double> white(n + w);
    for (auto& v : white) v = g(rng);
    std::vector<double> ma(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < w; ++m) ma[k] += white[k + m];
    const auto r = acf(ma, 20);
    for (std::size_t t = 1; t < w; ++t) EXPECT_NEAR(r.r[t], static_cast<double>(w - t) / w, 0.02);
    for (std::size_t t = w; t <= 20; ++t) EXPECT_LT(std::abs(r.r[t]), 4.0 / std::sqrt(static_cast<double>(n)) * 2.5);
}

TEST(Acf, InvariantToConstantOffset) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> a(5000);
    for (auto& v : a) v = g(rng);
    auto b = a;
    for (auto& v : b) v += 1.25;
    const auto ra = acf(a, 30), rb = acf(b, 30);
    for (std::size_t t = 0; t <= 30; ++t) EXPECT_NEAR(ra.r[t], rb.r[t], 1e-12);
    EXPECT_NEAR(ra.mean_abs(1, 3), (std::abs(ra.r[1]) + std::abs(ra.r[2]) + std::abs(ra.r[3])) / 3.0, 1e-15);
}

TEST(Acf, Errors) {
    const std::vector<double> flat(100, 0.3);
    EXPECT_THROW(acf(flat, 10), std::invalid_argument);
    const std::vector<double> tiny{1.0, 2.0};
    EXPECT_THROW(acf(tiny, 2), std::invalid_argument);
}

TEST(Moments, UniformAskAndConstant) {
    const std::vector<AmplitudeSequence> ask{{1, 3, 5, 7}, {7, 5, 3, 1}};
    const auto m = moments(std::span<const AmplitudeSequence>(ask));
    EXPECT_DOUBLE_EQ(m.mean_energy, 21.0);
    EXPECT_DOUBLE_EQ(m.mean_fourth_power, 777.0);
    EXPECT_DOUBLE_EQ(m.energy_variance, 777.0 - 441.0);
    EXPECT_DOUBLE_EQ(m.mean_fourth_sum, 4.0 * 777.0);

    const std::vector<AmplitudeSequence> flat{{3, 3, 3, 3}};
    const auto c = moments(std::span<const AmplitudeSequence>(flat));
    EXPECT_EQ(c.energy_variance, 0.0);
    EXPECT_EQ(c.kurtosis_ratio, 1.0);

    const std::vector<ComplexSymbolFrame> frames{qpsk(100, 9)};
    const auto q = moments(std::span<const ComplexSymbolFrame>(frames));
    EXPECT_EQ(q.mean_energy, 2.0);
    EXPECT_EQ(q.kurtosis_ratio, 1.0);
    EXPECT_EQ(q.mean_fourth_sum, 200.0);
}

TEST(Moments, UniformQamKurtosis) {
    Rng rng = make_rng(21);
    const std::vector<ComplexSymbolFrame> frames{generate_uniform_frame(1'000'000, rng)};
    const auto m = moments(std::span<const ComplexSymbolFrame>(frames));
    // E|x|^4 = 2 * 777 + 2 * 21^2 = 2436, (E|x|^2)^2 = 1764
    EXPECT_NEAR(m.kurtosis_ratio, 2436.0 / 1764.0, 0.005);
    EXPECT_NEAR(m.energy_variance, 672.0, 5.0);
    EXPECT_GE(m.kurtosis_ratio, 1.0);
}
