#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "czforge/model.hpp"

using namespace czforge;
using namespace czforge::model;

namespace {

constexpr double kTwoPiC = kTwoPi;

std::vector<ModeSpec> table_modes(int levels = 4, double omega_1 = 4.50) {
    return {{"Q1", levels, omega_1, -0.25}, {"Q2", levels, 4.25, 0.25}, {"C", levels, 5.5, -0.2}};
}

std::vector<Coupling> table_couplings(double s = 1.0) { return {{0, 1, 0.01 * s}, {0, 2, 0.1 * s}, {1, 2, 0.1 * s}}; }

double entry(const HamiltonianModel& h, const Occupation& a, const Occupation& b) {
    return h.matrix(static_cast<Eigen::Index>(h.basis->index_of(a)), static_cast<Eigen::Index>(h.basis->index_of(b)));
}

}  // namespace

TEST(Basis, ProductAndCutoffSizes) {
    EXPECT_EQ(Basis({4, 4, 4}).size(), 64u);
    // Qubits 3 levels, couplers 2 levels, eight modes, at most 4 excitations.
    Basis lattice({3, 3, 3, 3, 2, 2, 2, 2}, 4);
    for (const auto& s : lattice.states()) {
        int n = 0;
        for (int k : s) {
            n += k;
        }
        EXPECT_LE(n, 4);
    }
    EXPECT_LT(lattice.size(), 3u * 3 * 3 * 3 * 2 * 2 * 2 * 2);
    EXPECT_THROW(Basis({1, 4}), ConfigError);
    EXPECT_THROW(Basis({7}), ConfigError);
}

TEST(Build, SingleModeLadder) {
    const auto h = build({{"q", 3, 4.5, -0.25}}, {}, CouplingForm::Full);
    ASSERT_EQ(h.dimension(), 3u);
    EXPECT_NEAR(h.matrix(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(h.matrix(1, 1), 4.5 * kTwoPiC, 1e-12);
    EXPECT_NEAR(h.matrix(2, 2), 8.75 * kTwoPiC, 1e-12);
}

TEST(Build, HermitianWithRealDiagonal) {
    const auto h = build(table_modes(), table_couplings(), CouplingForm::Full);
    EXPECT_EQ(h.hermiticity_defect(), 0.0);
}

TEST(Build, RejectsUnknownMode) {
    EXPECT_THROW(build(table_modes(), {{0, 5, 0.1}}, CouplingForm::Full), ConfigError);
    EXPECT_THROW(build(table_modes(), {{1, 1, 0.1}}, CouplingForm::Full), ConfigError);
}

TEST(Build, RwaProjectionMatchesSixStateBlock) {
    // Coupler empty, up to two excitations: 000, 010, 100, 020, 110, 200.
    const auto h = build(table_modes(), table_couplings(), CouplingForm::Rwa);
    const std::vector<Occupation> states{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 2, 0}, {1, 1, 0}, {2, 0, 0}};
    const double w1 = 4.50, w2 = 4.25, a1 = -0.25, a2 = 0.25, g = 0.01;
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(6, 6);
    expect.diagonal() << 0.0, w2, w1, 2 * w2 + a2, w1 + w2, 2 * w1 + a1;
    expect(1, 2) = expect(2, 1) = g;
    expect(3, 4) = expect(4, 3) = std::sqrt(2.0) * g;
    expect(4, 5) = expect(5, 4) = std::sqrt(2.0) * g;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            EXPECT_NEAR(entry(h, states[i], states[j]), expect(i, j) * kTwoPiC, 1e-12) << i << "," << j;
        }
    }
}

TEST(Build, FullFormAddsCounterRotatingTerms) {
    const auto h = build(table_modes(), table_couplings(), CouplingForm::Full);
    EXPECT_NEAR(entry(h, {0, 0, 0}, {1, 1, 0}), -0.01 * kTwoPiC, 1e-12);
    EXPECT_NEAR(entry(h, {0, 0, 0}, {1, 0, 1}), -0.1 * kTwoPiC, 1e-12);
    const auto r = build(table_modes(), table_couplings(), CouplingForm::Rwa);
    EXPECT_EQ(entry(r, {0, 0, 0}, {1, 1, 0}), 0.0);
}

TEST(Build, RwaConservesExcitationNumber) {
    const auto h = build(table_modes(), table_couplings(), CouplingForm::Rwa);
    Eigen::VectorXd n(static_cast<Eigen::Index>(h.dimension()));
    for (std::size_t i = 0; i < h.dimension(); ++i) {
        int total = 0;
        for (int k : h.basis->state(i)) {
            total += k;
        }
        n[static_cast<Eigen::Index>(i)] = total;
    }
    const Eigen::MatrixXd comm = h.matrix * n.asDiagonal().toDenseMatrix() - n.asDiagonal().toDenseMatrix() * h.matrix;
    EXPECT_LT(comm.norm(), 1e-12);
}

TEST(DressedSpectrum, UncoupledLabelsAreBare) {
    const auto h = build(table_modes(), table_couplings(0.0), CouplingForm::Full);
    const auto spec = dressed_spectrum(h);
    for (const auto& s : spec.states()) {
        EXPECT_FALSE(s.label.hybridized);
        EXPECT_NEAR(s.label.overlap, 1.0, 1e-12);
        EXPECT_NEAR(s.energy, entry(h, s.label.bare, s.label.bare), 1e-9);
    }
    for (std::size_t k = 1; k < spec.size(); ++k) {
        EXPECT_LE(spec[k - 1].energy, spec[k].energy);
    }
}

TEST(DressedSpectrum, WorkPointDegeneracy) {
    const auto h = build(table_modes(), table_couplings(0.0), CouplingForm::Full);
    const double e110 = entry(h, {1, 1, 0}, {1, 1, 0});
    EXPECT_NEAR(entry(h, {2, 0, 0}, {2, 0, 0}), e110, 1e-12);
    EXPECT_NEAR(entry(h, {0, 2, 0}, {0, 2, 0}), e110, 1e-12);
}

TEST(DressedSpectrum, ResonantPairSplitsByTwoG) {
    const double g = 0.013;
    const auto h = build({{"a", 2, 5.0, 0.0}, {"b", 2, 5.0, 0.0}}, {{0, 1, g}}, CouplingForm::Rwa);
    const auto spec = dressed_spectrum(h);
    EXPECT_NEAR((spec[2].energy - spec[1].energy) / kTwoPiC, 2 * g, 1e-12);
}

TEST(DressedSpectrum, GaugeInvariance) {
    // Flipping the coupler's sign (a_c -> -a_c) flips g_1c and g_2c together.
    const auto a = dressed_spectrum(build(table_modes(), table_couplings(), CouplingForm::Full));
    const auto b = dressed_spectrum(build(table_modes(), {{0, 1, 0.01}, {0, 2, -0.1}, {1, 2, -0.1}}, CouplingForm::Full));
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_NEAR(a[k].energy, b[k].energy, 1e-12 * std::max(1.0, std::abs(a[k].energy)));
    }
    // In a bipartite coupling graph the global flip is also a gauge.
    const auto c = dressed_spectrum(build({{"a", 4, 4.5, -0.25}, {"b", 4, 5.2, -0.2}}, {{0, 1, 0.1}}, CouplingForm::Full));
    const auto d = dressed_spectrum(build({{"a", 4, 4.5, -0.25}, {"b", 4, 5.2, -0.2}}, {{0, 1, -0.1}}, CouplingForm::Full));
    for (std::size_t k = 0; k < c.size(); ++k) {
        EXPECT_NEAR(c[k].energy, d[k].energy, 1e-12 * std::max(1.0, std::abs(c[k].energy)));
    }
}

TEST(DressedSpectrum, TruncationConverged) {
    // RWA keeps the low excitation blocks closed, so a fifth level cannot move
    // them. Counter-rotating terms reach it and shift the low states by ~2 kHz.
    for (auto [form, tol] : {std::pair{CouplingForm::Rwa, 1e-12}, std::pair{CouplingForm::Full, 1e-5}}) {
        const auto four = dressed_spectrum(build(table_modes(4, 4.60), table_couplings(), form));
        const auto five = dressed_spectrum(build(table_modes(5, 4.60), table_couplings(), form));
        for (std::size_t k = 0; k < 6; ++k) {
            EXPECT_LT(std::abs(four[k].energy - five[k].energy) / kTwoPiC, tol) << k;
        }
    }
}

TEST(EffectiveCoupling, BrightStateDoublesTheSinglePath) {
    const auto h = build(table_modes(), table_couplings(), CouplingForm::Rwa);
    EXPECT_NEAR(effective_coupling(h, {1, 1, 0}, bright_state({2, 0, 0}, {0, 2, 0})), 0.020, 1e-12);
    EXPECT_NEAR(effective_coupling(h, {1, 1, 0}, Occupation{2, 0, 0}), std::sqrt(2.0) * 0.01, 1e-12);
    const auto h0 = build(table_modes(), {{0, 2, 0.1}, {1, 2, 0.1}}, CouplingForm::Rwa);
    EXPECT_EQ(effective_coupling(h0, {1, 1, 0}, bright_state({2, 0, 0}, {0, 2, 0})), 0.0);
}

TEST(EffectiveCoupling, BrightStateNeedsBothTargets) {
    const auto h = build({{"a", 2, 4.5, 0}, {"b", 3, 4.25, 0.25}}, {{0, 1, 0.01}}, CouplingForm::Rwa);
    EXPECT_THROW(effective_coupling(h, {1, 1}, bright_state({2, 0}, {0, 2})), ParameterDomainError);
}

TEST(EffectiveBlock, DispersiveExchangeMatchesSecondOrder) {
    // Two qubits coupled only through a far-detuned coupler: J ~ g1 g2 / 2 (1/D1 + 1/D2).
    const double g = 0.05, w1 = 4.5, w2 = 4.6, wc = 6.5;
    const auto h = build({{"a", 2, w1, 0}, {"b", 2, w2, 0}, {"c", 2, wc, 0}}, {{0, 2, g}, {1, 2, g}}, CouplingForm::Rwa);
    const double j = exchange_coupling(h, {1, 0, 0}, {0, 1, 0});
    const double expect = g * g / 2 * (1 / (w1 - wc) + 1 / (w2 - wc));
    EXPECT_NEAR(j, expect, 0.05 * std::abs(expect));
}

TEST(EffectiveBlock, ExactForAnIsolatedBlock) {
    const auto h = build({{"a", 2, 4.5, 0}, {"b", 2, 4.5, 0}}, {{0, 1, 0.02}}, CouplingForm::Rwa);
    EXPECT_NEAR(exchange_coupling(h, {1, 0}, {0, 1}), 0.02, 1e-12);
}
