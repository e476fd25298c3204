#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "czforge/gate_problem.hpp"
#include "czforge/gateval.hpp"
#include "czforge/hold_scan.hpp"

using namespace czforge;
using namespace czforge::gateval;

namespace {

Matrix4 phases(double a, double b, double c, double d) {
    Eigen::Vector4cd v;
    v << std::polar(1.0, a), std::polar(1.0, b), std::polar(1.0, c), std::polar(1.0, d);
    return v.asDiagonal();
}

std::shared_ptr<const model::ModeSystem> table_system(double g_coupler = 0.1, double coupler_idle = 5.552950140802118) {
    return std::make_shared<const model::ModeSystem>(
        std::vector<model::ModeSpec>{{"Q1", 4, 4.60, -0.25}, {"Q2", 4, 4.25, 0.25}, {"C", 4, coupler_idle, -0.2}},
        std::vector<model::Coupling>{{0, 1, 0.01}, {0, 2, g_coupler}, {1, 2, g_coupler}}, model::CouplingForm::Full);
}

}  // namespace

TEST(Fidelity, Examples) {
    const Matrix4 cz = cz_matrix();
    EXPECT_EQ(avg_gate_fidelity(cz, cz), 1.0);
    EXPECT_NEAR(avg_gate_fidelity(Matrix4::Identity(), cz), 0.4, 1e-15);
    EXPECT_EQ(avg_gate_fidelity(Matrix4::Zero(), cz), 0.0);
}

TEST(Fidelity, GlobalPhaseInvariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int i = 0; i < 50; ++i) {
        const Matrix4 m = phases(u(rng), u(rng), u(rng), u(rng)) * cz_matrix();
        const double f = avg_gate_fidelity(m, cz_matrix());
        EXPECT_NEAR(avg_gate_fidelity(std::polar(1.0, u(rng)) * m, cz_matrix()), f, 1e-12);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0 + 1e-15);
    }
}

TEST(SingleQubitPhases, ExactCancellation) {
    const double a = 0.7, b = -2.1;
    const auto out = remove_single_qubit_phases(phases(0, b, a, a + b + kPi));
    EXPECT_LT((out.matrix - cz_matrix()).cwiseAbs().maxCoeff(), 1e-12);
    const auto id = remove_single_qubit_phases(Matrix4::Identity());
    EXPECT_LT((id.matrix - Matrix4::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(id.theta_a, 0.0);
    EXPECT_EQ(id.theta_b, 0.0);
}

TEST(SingleQubitPhases, RandomPerturbationRecoversCz) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const double g = u(rng), a = u(rng), b = u(rng);
        const Matrix4 m = std::polar(1.0, g) * phases(0, b, a, a + b) * cz_matrix();
        const auto out = remove_single_qubit_phases(m);
        EXPECT_LT((out.matrix - cz_matrix()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::arg(out.matrix(k00, k00)), 0.0, 1e-15);
    }
}

TEST(SingleQubitPhases, VanishingDiagonal) {
    Matrix4 m = Matrix4::Identity();
    m(k01, k01) = 1e-8;
    EXPECT_THROW(remove_single_qubit_phases(m), PhaseUndefinedError);
}

TEST(ConditionalPhase, Examples) {
    EXPECT_NEAR(conditional_phase(cz_matrix()), kPi, 1e-12);
    EXPECT_EQ(conditional_phase(Matrix4::Identity()), 0.0);
    EXPECT_NEAR(conditional_phase(phases(0, 0.3, -1.2, 0.3 - 1.2 + 0.9)), 0.9, 1e-12);
    Matrix4 m = Matrix4::Identity();
    m(k11, k11) = 0.0;
    EXPECT_THROW(conditional_phase(m), PhaseUndefinedError);
}

TEST(ConditionalPhase, InvariantUnderLocalZ) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    const Matrix4 base = phases(0.1, 0.4, -0.3, 2.0);
    const double theta = conditional_phase(base);
    for (int i = 0; i < 50; ++i) {
        const double a = u(rng), b = u(rng), g = u(rng);
        const Matrix4 z = std::polar(1.0, g) * phases(0, b, a, a + b);
        EXPECT_NEAR(wrap_phase(conditional_phase(Matrix4(z * base)) - theta), 0.0, 1e-12);
    }
}

TEST(WrapPhase, HalfOpenInterval) {
    EXPECT_EQ(wrap_phase(kPi), kPi);
    EXPECT_NEAR(wrap_phase(-kPi), kPi, 1e-15);
    EXPECT_NEAR(wrap_phase(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
}

TEST(LeakageAndSwap, ClampedToUnitInterval) {
    const auto a = leakage_and_swap(1.0 + 1e-15, 0.25);
    EXPECT_EQ(a.eps_leak, 0.0);
    EXPECT_EQ(a.eps_swap, 0.75);
    const auto b = leakage_and_swap(-1e-15, 1.0);
    EXPECT_EQ(b.eps_leak, 1.0);
}

TEST(Cost, IdealAndIdentity) {
    EXPECT_NEAR(cost_from_matrix(cz_matrix()), 0.0, 1e-12);
    EXPECT_NEAR(cost_from_matrix(Matrix4::Identity()), kPi * kPi, 1e-12);
    const auto r = score(Matrix4::Identity());
    EXPECT_NEAR(r.fidelity, 0.4, 1e-12);
    EXPECT_EQ(r.c_leak, 0.0);
    EXPECT_NEAR(r.cost, r.c_phase + r.c_leak, 1e-15);
}

TEST(Cost, LeakageTermIsMeanColumnDeficit) {
    Matrix4 m = cz_matrix();
    m(k11, k11) *= std::sqrt(0.9);  // 10% of |11> gone
    EXPECT_NEAR(leakage_cost(m), 0.1 / 4, 1e-15);
    const auto r = score(m);
    EXPECT_NEAR(r.eps_leak, 0.1, 1e-12);
    EXPECT_GE(r.c_leak, 0.0);
    EXPECT_GE(r.c_phase, 0.0);
}

TEST(GateProblem, ZeroAmplitudeIsIdentityProcess) {
    CzGateProblem prob(table_system(), {}, {2.0, 4.60, 5.552950140802118}, 0.01);
    const auto r = prob.evaluate({16.0, 5.552950140802118, 4.60});
    EXPECT_NEAR(r.eps_leak, 0.0, 1e-9);
    EXPECT_NEAR(r.eps_swap, 0.0, 1e-9);
    EXPECT_NEAR(r.theta, 0.0, 1e-3);  // residual static ZZ over the gate window
    EXPECT_NEAR(r.fidelity, 0.4, 1e-3);
}

TEST(GateProblem, HalfRabiCycleEmptiesEleven) {
    // Coupler detached, near-rectangular pulse onto the triple resonance; the
    // bright coupling 2 g_12 = 20 MHz moves |110> fully into |B> after 1/(4 * 2 g_12).
    CzGateProblem prob(table_system(0.0, 6.0), {}, {0.01, 4.60, 6.0}, 0.001);
    const auto r = prob.evaluate({1.0 / (4 * 0.02), 6.0, 4.50});
    EXPECT_GT(r.eps_leak, 0.97);
    EXPECT_LT(r.eps_swap, 0.05);
}

TEST(GateProblem, KnownOptimumMeetsTargets) {
    CzGateProblem prob(table_system(), {}, {2.0, 4.60, 5.552950140802118}, 0.01);
    const auto r = prob.evaluate({16.16, 4.7442, 4.48334});
    EXPECT_LT(r.cost, 1e-6);
    EXPECT_LT(r.gate_error(), 1e-4);
    EXPECT_GE(r.fidelity, 1 - 10 * r.cost - 1e-4);
    EXPECT_NEAR(std::abs(r.theta), kPi, 1e-3);
}

TEST(GateProblem, FailuresBecomeInfiniteCost) {
    CzGateProblem prob(table_system(), {}, {2.0, 4.60, 5.552950140802118}, 0.01);
    EXPECT_TRUE(std::isinf(prob.cost({-5.0, 4.8, 4.5})));
}

TEST(GateProblem, SymmetricHalfMatchesFullEvolution) {
    CzGateProblem prob(table_system(), {}, {2.0, 4.60, 5.552950140802118}, 0.01);
    for (const GateParams p : {GateParams{16.16, 4.7442, 4.48334}, GateParams{7.3, 5.1, 4.43}}) {
        const auto bg = prob.ground();
        const Matrix4 full = prob.block(prob.evolve(p, {bg}), bg);
        const Matrix4 half = prob.symmetric_block(p, bg);
        EXPECT_LT((full - half).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_NEAR(prob.cost(p), cost_from_matrix(full), 1e-6);
    }
}

TEST(HoldScan, CurveTracksExactCost) {
    CzGateProblem prob(table_system(), {}, {2.0, 4.60, 5.552950140802118}, 0.01);
    HoldScanSettings s;
    s.dt = 0.01;
    s.long_step = 0.5;
    const HoldScanner scan(prob, s);
    const auto curve = scan.curve(4.7442, 4.48334, 5.0, 40.0);
    ASSERT_GT(curve.size(), 20U);
    for (std::size_t i = 0; i < curve.size(); i += 7) {
        const double exact = prob.cost({curve[i].t_hold, 4.7442, 4.48334});
        // Composed long holds drop an erf tail of about 1e-5 of the swing.
        EXPECT_NEAR(curve[i].cost, exact, 1e-4 * std::max(1.0, exact)) << curve[i].t_hold;
    }
    // Short holds are sampled every 0.5 ns; the nearest sample to 16.16 is 16.0.
    const auto b = scan.best(4.7442, 4.48334, 5.0, 40.0);
    EXPECT_LT(b.cost, 1e-3);
    EXPECT_NEAR(b.t_hold, 16.16, 0.5);
}
