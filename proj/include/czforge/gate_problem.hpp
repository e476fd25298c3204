#pragma once

// The CZ pulse problem: p = (t_hold, coupler_on, qubit_on) -> schedule ->
// evolution of the computational dressed states -> GateReport / cost.

#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "czforge/control.hpp"
#include "czforge/dynamics.hpp"
#include "czforge/gateval.hpp"
#include "czforge/model.hpp"

namespace czforge::gateval {

using model::Occupation;

struct GateParams {
    double t_hold = 0.0;      // ns
    double coupler_on = 0.0;  // GHz
    double qubit_on = 0.0;    // GHz

    [[nodiscard]] std::vector<double> to_vector() const { return {t_hold, coupler_on, qubit_on}; }
    static GateParams from_vector(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }
};

/// Which modes form the gate and which one each pulse drives.
struct GateLayout {
    std::size_t qubit_a = 0;      // first gate qubit (the tuned transmon)
    std::size_t qubit_b = 1;      // second gate qubit
    std::size_t tuned_qubit = 0;  // mode driven by the qubit pulse
    std::size_t coupler = 2;      // mode driven by the coupler pulse

    /// Computational states |00>, |01>, |10>, |11> with the other modes in `background`.
    [[nodiscard]] std::array<Occupation, 4> computational(Occupation background) const {
        std::array<Occupation, 4> out;
        const int bits[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
        for (int j = 0; j < 4; ++j) {
            Occupation o = background;
            o.at(qubit_a) = bits[j][0];
            o.at(qubit_b) = bits[j][1];
            out[static_cast<std::size_t>(j)] = std::move(o);
        }
        return out;
    }
};

struct PulseSettings {
    double sigma = 1.0;         // ns
    double qubit_idle = 4.60;   // GHz
    double coupler_idle = 5.5;  // GHz
};

class CzGateProblem {
public:
    CzGateProblem(std::shared_ptr<const model::ModeSystem> system, GateLayout layout, PulseSettings pulse, double dt,
                  dynamics::Method method = dynamics::Method::Auto)
        : system_(std::move(system)), layout_(layout), pulse_(pulse), dt_(dt), method_(method) {}

    [[nodiscard]] const model::ModeSystem& system() const { return *system_; }
    [[nodiscard]] const GateLayout& layout() const { return layout_; }
    [[nodiscard]] const PulseSettings& pulse() const { return pulse_; }
    [[nodiscard]] double dt() const { return dt_; }

    [[nodiscard]] CzGateProblem with_dt(double dt) const { return {system_, layout_, pulse_, dt, method_}; }

    [[nodiscard]] control::PulseSchedule schedule(const GateParams& p) const {
        const auto qubit = control::flattop_for_hold(pulse_.qubit_idle, p.qubit_on, pulse_.sigma, p.t_hold);
        const auto coupler = control::flattop_for_hold(pulse_.coupler_idle, p.coupler_on, pulse_.sigma, p.t_hold);
        control::PulseSchedule s(qubit.t_gate, dt_);
        s.set(layout_.tuned_qubit, qubit);
        s.set(layout_.coupler, coupler);
        return s;
    }

    /// Evolves the computational states for each background; states are
    /// ordered background-major, (00, 01, 10, 11) within a background.
    [[nodiscard]] dynamics::Evolution evolve(const GateParams& p, const std::vector<Occupation>& backgrounds,
                                             dynamics::EvolveOptions opts = {}) const {
        std::vector<Occupation> initial;
        for (const auto& bg : backgrounds) {
            for (auto& s : layout_.computational(bg)) {
                initial.push_back(std::move(s));
            }
        }
        opts.method = method_;
        return dynamics::evolve_states(*system_, schedule(p), initial, opts);
    }

    /// 4x4 block M[j][k] = <comp_j| U |comp_k> for one background of an evolution.
    [[nodiscard]] Matrix4 block(const dynamics::Evolution& ev, const Occupation& background,
                                std::size_t background_index = 0) const {
        const auto comp = layout_.computational(background);
        Matrix4 m;
        for (int k = 0; k < 4; ++k) {
            for (int j = 0; j < 4; ++j) {
                m(j, k) = ev.amplitude(background_index * 4 + static_cast<std::size_t>(k),
                                       comp[static_cast<std::size_t>(j)]);
            }
        }
        return m;
    }

    [[nodiscard]] Occupation ground() const { return Occupation(system_->modes().size(), 0); }

    [[nodiscard]] GateReport evaluate(const GateParams& p) const {
        const auto bg = ground();
        const auto ev = evolve(p, {bg});
        return score(block(ev, bg));
    }

    /// Same block as block(evolve(p, {background})) in the rotating idle frame,
    /// from half the propagation. Both pulses are symmetric about t_gate / 2 and
    /// H(t) is real symmetric, so U = U_half^T U_half.
    [[nodiscard]] Matrix4 symmetric_block(const GateParams& p, const Occupation& background) const {
        const auto sched = schedule(p);
        const auto spec = dynamics::idle_spectrum(*system_, sched);
        const auto comp = layout_.computational(background);
        const auto dim = static_cast<Eigen::Index>(system_->dimension());
        Eigen::MatrixXcd psi(dim, 4);
        std::array<double, 4> energy{};
        for (int j = 0; j < 4; ++j) {
            const auto& d = spec.require(comp[static_cast<std::size_t>(j)]);
            psi.col(j) = d.vector.cast<dynamics::cplx>();
            energy[static_cast<std::size_t>(j)] = d.energy;
        }
        const double half = 0.5 * sched.t_gate();
        // The full-gate step count applies; the step is shared by both halves.
        const std::size_t n = (dynamics::step_count(sched.t_gate(), dt_) + 1) / 2;
        const double h = half / static_cast<double>(n);
        const auto idle = system_->idle_frequencies();
        dynamics::StepKernel kernel(*system_, method_);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = (static_cast<double>(k) + 0.5) * h;
            kernel.apply(system_->diagonal(sched.frequencies(t, idle)), h, psi);
        }
        Matrix4 m = psi.transpose() * psi;
        for (int j = 0; j < 4; ++j) {
            m.row(j) *= std::polar(1.0, energy[static_cast<std::size_t>(j)] * sched.t_gate());
        }
        return m;
    }

    /// Phase + leakage cost; failures map to +inf so a simplex can step away.
    [[nodiscard]] double cost(const GateParams& p) const noexcept {
        try {
            return cost_from_matrix(symmetric_block(p, ground()));
        } catch (...) {
            return std::numeric_limits<double>::infinity();
        }
    }

private:
    std::shared_ptr<const model::ModeSystem> system_;
    GateLayout layout_;
    PulseSettings pulse_;
    double dt_;
    dynamics::Method method_;
};

}  // namespace czforge::gateval
