#pragma once

// Device assembly for the scenarios: the three-mode gate system, the
// eight-mode spectator lattice and the coupler decoupling points.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "czforge/experiments/config.hpp"
#include "czforge/gate_problem.hpp"
#include "czforge/model.hpp"

namespace czforge::experiments {

using model::Occupation;

inline constexpr int kDecouplingGrid = 201;

/// Zero of a signed effective coupling over coupler frequency. Scans `grid`
/// points, bisects the sign change with the smallest bracketing |coupling|;
/// without a sign change returns the grid point of minimal |coupling|,
/// refined by golden-section search.
inline double decoupling_point(const std::function<double(double)>& coupling, Range scan,
                               int grid = kDecouplingGrid) {
    std::vector<double> x(static_cast<std::size_t>(grid));
    std::vector<double> y(x.size());
    for (int i = 0; i < grid; ++i) {
        x[static_cast<std::size_t>(i)] = scan.lo + (scan.hi - scan.lo) * i / (grid - 1);
        y[static_cast<std::size_t>(i)] = coupling(x[static_cast<std::size_t>(i)]);
    }
    std::optional<std::size_t> bracket;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (std::signbit(y[i]) != std::signbit(y[i + 1])) {
            const double w = std::abs(y[i]) + std::abs(y[i + 1]);
            if (!bracket || w < std::abs(y[*bracket]) + std::abs(y[*bracket + 1])) {
                bracket = i;
            }
        }
    }
    if (bracket) {
        double a = x[*bracket];
        double b = x[*bracket + 1];
        double fa = y[*bracket];
        for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = coupling(m);
            if (std::signbit(fm) == std::signbit(fa)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    }
    warn("no sign change of the coupling in the decoupling scan; using its minimum magnitude");
    const auto best = static_cast<std::size_t>(
        std::min_element(y.begin(), y.end(), [](double p, double q) { return std::abs(p) < std::abs(q); }) -
        y.begin());
    double a = x[best == 0 ? 0 : best - 1];
    double b = x[std::min(best + 1, x.size() - 1)];
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        const double c = b - r * (b - a);
        const double d = a + r * (b - a);
        if (std::abs(coupling(c)) < std::abs(coupling(d))) {
            b = d;
        } else {
            a = c;
        }
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Three-mode gate system (Q1, Q2, C)

struct TripletSpec {
    model::ModeSpec q1;
    model::ModeSpec q2;
    model::ModeSpec c;
    double g_12 = 0.0;
    double g_1c = 0.0;
    double g_2c = 0.0;
    model::CouplingForm form = model::CouplingForm::Full;
    std::optional<int> cutoff;

    [[nodiscard]] model::ModeSystem system() const {
        return model::ModeSystem({q1, q2, c}, {{0, 1, g_12}, {0, 2, g_1c}, {1, 2, g_2c}}, form, cutoff);
    }

    [[nodiscard]] model::ModeSystem with_coupler(double omega_c) const {
        TripletSpec t = *this;
        t.c.omega = omega_c;
        return t.system();
    }
};

/// Dressed |110> <-> |B> coupling (GHz, signed) at the idle point for a coupler frequency.
inline double idle_bright_coupling(const TripletSpec& t, double omega_c) {
    const auto sys = t.with_coupler(omega_c);
    return model::bright_coupling(sys.hamiltonian(), {1, 1, 0}, {2, 0, 0}, {0, 2, 0});
}

/// Dressed |100> <-> |010> exchange coupling (GHz, signed) for a coupler frequency.
inline double idle_exchange_coupling(const TripletSpec& t, double omega_c) {
    const auto sys = t.with_coupler(omega_c);
    return model::exchange_coupling(sys.hamiltonian(), {1, 0, 0}, {0, 1, 0});
}

inline TripletSpec gate_triplet(const ExperimentConfig& cfg, std::optional<std::array<int, 3>> levels = std::nullopt,
                                std::optional<int> cutoff = std::nullopt) {
    const auto m = cfg.device.resolved();
    const auto lv = levels.value_or(cfg.device.levels);
    TripletSpec t;
    t.q1 = {"Q1", lv[0], cfg.pulse.qubit_idle, m.alpha_1};
    t.q2 = {"Q2", lv[1], m.omega_2, m.alpha_2};
    t.c = {"C", lv[2], m.omega_c, m.alpha_c};
    t.g_12 = m.g_12 * cfg.scenario.g12_scale;
    t.g_1c = m.g_1c;
    t.g_2c = m.g_2c;
    t.form = cfg.device.form;
    t.cutoff = cutoff;
    return t;
}

/// Coupler idle frequency: the configured value, else the computed decoupling point.
inline double resolve_coupler_idle(const ExperimentConfig& cfg, const TripletSpec& t) {
    if (cfg.pulse.coupler_idle) {
        return *cfg.pulse.coupler_idle;
    }
    return decoupling_point([&](double wc) { return idle_bright_coupling(t, wc); }, cfg.pulse.decoupling_scan);
}

struct GateDevice {
    std::shared_ptr<const model::ModeSystem> system;
    gateval::GateLayout layout;
    gateval::PulseSettings pulse;
    quantize::ModeParams params;  // gate-pair parameters actually used

    [[nodiscard]] gateval::CzGateProblem problem(double dt) const { return {system, layout, pulse, dt}; }
};

inline GateDevice gate_device(const ExperimentConfig& cfg, std::optional<std::array<int, 3>> levels = std::nullopt,
                              std::optional<int> cutoff = std::nullopt) {
    auto t = gate_triplet(cfg, levels, cutoff);
    t.c.omega = resolve_coupler_idle(cfg, t);
    GateDevice d;
    d.system = std::make_shared<const model::ModeSystem>(t.system());
    d.pulse = {cfg.pulse.sigma, cfg.pulse.qubit_idle, t.c.omega};
    d.params = cfg.device.resolved();
    d.params.g_12 = t.g_12;
    d.params.omega_c = t.c.omega;
    return d;
}

// ---------------------------------------------------------------------------
// Spectator lattice (Q1, Q2, S1, S2, C1, C2, C3, C4)
//
//   S1 --C4-- S2
//   |         |
//   C2        C3
//   |         |
//   Q1 --C1-- Q2

inline constexpr std::size_t kQ1 = 0, kQ2 = 1, kS1 = 2, kS2 = 3, kC1 = 4, kC2 = 5, kC3 = 6, kC4 = 7;

struct LatticeDevice {
    std::shared_ptr<const model::ModeSystem> system;
    gateval::GateLayout layout{kQ1, kQ2, kQ1, kC1};
    gateval::PulseSettings pulse;
    std::array<double, 4> coupler_idle{};  // C1..C4

    /// Background occupation with spectators (S1, S2) = bits.
    [[nodiscard]] Occupation background(const std::string& bits) const {
        Occupation o(8, 0);
        o[kS1] = bits.at(0) - '0';
        o[kS2] = bits.at(1) - '0';
        return o;
    }
};

/// Reduced gate system with the lattice truncation and coupling form; the
/// spectator-free reference.
inline GateDevice lattice_reference(const ExperimentConfig& cfg) {
    const auto& l = cfg.device.lattice;
    ExperimentConfig c = cfg;
    c.device.form = l.form;
    return gate_device(c, std::array<int, 3>{l.qubit_levels, l.qubit_levels, l.coupler_levels}, l.excitation_cutoff);
}

/// `spectator_coupling_scale` multiplies every coupling that touches a spectator
/// (0 gives the decoupled control).
inline LatticeDevice lattice_device(const ExperimentConfig& cfg, double main_coupler_idle,
                                    double spectator_coupling_scale = 1.0) {
    const auto m = cfg.device.resolved();
    const auto& l = cfg.device.lattice;
    const double g_direct = l.g_direct.value_or(m.g_12 * cfg.scenario.g12_scale) * spectator_coupling_scale;
    const double g_coupler = l.g_coupler.value_or(0.5 * (m.g_1c + m.g_2c)) * spectator_coupling_scale;
    const int ql = l.qubit_levels;
    const int cl = l.coupler_levels;

    LatticeDevice d;
    d.coupler_idle[0] = main_coupler_idle;
    // Spectator couplers: decouple each pair (a, b) at its idle point.
    const struct {
        model::ModeSpec a;
        model::ModeSpec b;
    } pairs[3] = {
        {{"Q1", ql, cfg.pulse.qubit_idle, m.alpha_1}, {"S1", ql, l.s1.omega, l.s1.alpha}},
        {{"Q2", ql, m.omega_2, m.alpha_2}, {"S2", ql, l.s2.omega, l.s2.alpha}},
        {{"S1", ql, l.s1.omega, l.s1.alpha}, {"S2", ql, l.s2.omega, l.s2.alpha}},
    };
    for (std::size_t k = 0; k < 3; ++k) {
        if (l.coupler_idle[k]) {
            d.coupler_idle[k + 1] = *l.coupler_idle[k];
            continue;
        }
        if (spectator_coupling_scale == 0.0) {
            d.coupler_idle[k + 1] = cfg.pulse.decoupling_scan.hi;
            continue;
        }
        TripletSpec t;
        t.q1 = pairs[k].a;
        t.q2 = pairs[k].b;
        t.c = {"C", cl, 0.0, m.alpha_c};
        t.g_12 = g_direct;
        t.g_1c = g_coupler;
        t.g_2c = g_coupler;
        t.form = l.form;
        t.cutoff = l.excitation_cutoff;
        d.coupler_idle[k + 1] =
            decoupling_point([&](double wc) { return idle_exchange_coupling(t, wc); }, cfg.pulse.decoupling_scan);
    }

    std::vector<model::ModeSpec> modes{
        {"Q1", ql, cfg.pulse.qubit_idle, m.alpha_1}, {"Q2", ql, m.omega_2, m.alpha_2},
        {"S1", ql, l.s1.omega, l.s1.alpha},          {"S2", ql, l.s2.omega, l.s2.alpha},
        {"C1", cl, d.coupler_idle[0], m.alpha_c},    {"C2", cl, d.coupler_idle[1], m.alpha_c},
        {"C3", cl, d.coupler_idle[2], m.alpha_c},    {"C4", cl, d.coupler_idle[3], m.alpha_c},
    };
    std::vector<model::Coupling> couplings{
        {kQ1, kQ2, m.g_12 * cfg.scenario.g12_scale},
        {kQ1, kC1, m.g_1c},
        {kQ2, kC1, m.g_2c},
    };
    if (spectator_coupling_scale != 0.0) {
        const std::vector<model::Coupling> spectator{
            {kQ1, kS1, g_direct}, {kQ1, kC2, g_coupler}, {kS1, kC2, g_coupler},
            {kQ2, kS2, g_direct}, {kQ2, kC3, g_coupler}, {kS2, kC3, g_coupler},
            {kS1, kS2, g_direct}, {kS1, kC4, g_coupler}, {kS2, kC4, g_coupler},
        };
        couplings.insert(couplings.end(), spectator.begin(), spectator.end());
    }
    d.system = std::make_shared<const model::ModeSystem>(modes, couplings, l.form, l.excitation_cutoff);
    d.pulse = {cfg.pulse.sigma, cfg.pulse.qubit_idle, d.coupler_idle[0]};
    return d;
}

/// Lattice used to tune the gate with both spectators in 0. Under RWA the
/// computational states never exceed two excitations, so cutoff 2 is exact there.
inline LatticeDevice lattice_calibration(const ExperimentConfig& cfg, double main_coupler_idle) {
    if (cfg.device.lattice.form != model::CouplingForm::Rwa) {
        return lattice_device(cfg, main_coupler_idle);
    }
    // Same spectator coupler idles as the full lattice.
    const auto full = lattice_device(cfg, main_coupler_idle);
    ExperimentConfig c = cfg;
    c.device.lattice.excitation_cutoff = 2;
    for (std::size_t k = 0; k < 3; ++k) {
        c.device.lattice.coupler_idle[k] = full.coupler_idle[k + 1];
    }
    return lattice_device(c, main_coupler_idle);
}

}  // namespace czforge::experiments
