#pragma once

// Fast cost-vs-hold scans at fixed (coupler_on, qubit_on).
//
// Both pulses are symmetric about t_gate/2 and H(t) is real symmetric, so the
// propagator factors as U = U_half^T U_half with U_half the evolution over the
// first half. For long holds the ramp is split off once:
//   U(t_hold) ~ U_rise^T exp(-i H_on (t_hold - 2 L)) U_rise,
// where U_rise covers the rising edge plus L of plateau and the neglected erf
// tail is erfc(L / (sqrt2 sigma)) / 2 of the swing. One rise propagation and one
// diagonalization then price every long hold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "czforge/control.hpp"
#include "czforge/dynamics.hpp"
#include "czforge/gate_problem.hpp"
#include "czforge/gateval.hpp"

namespace czforge::gateval {

struct HoldScanSettings {
    double short_step = 0.5;   // ns, exact half propagations below 2L
    double long_step = 0.02;   // ns, composed holds from 2L on
    double tail_widths = 3.0;  // L in units of sqrt2 sigma
    double dt = 0.1;           // ns; scans only rank candidates
};

struct HoldCost {
    double t_hold = 0.0;
    double cost = std::numeric_limits<double>::infinity();
};

class HoldScanner {
public:
    explicit HoldScanner(const CzGateProblem& problem, HoldScanSettings settings = {})
        : problem_(problem.with_dt(settings.dt)), settings_(settings) {
        const auto& sys = problem_.system();
        idle_ = sys.idle_frequencies();
        idle_[problem_.layout().tuned_qubit] = problem_.pulse().qubit_idle;
        idle_[problem_.layout().coupler] = problem_.pulse().coupler_idle;
        const auto spec = model::dressed_spectrum(sys.hamiltonian(idle_));
        const auto comp = problem_.layout().computational(problem_.ground());
        p_.resize(static_cast<Eigen::Index>(sys.dimension()), 4);
        for (int j = 0; j < 4; ++j) {
            const auto& s = spec.require(comp[static_cast<std::size_t>(j)]);
            p_.col(j) = s.vector;
            energy_[j] = s.energy;
        }
    }

    /// Ramp-plus-plateau length split off for composed long holds.
    [[nodiscard]] double tail() const { return settings_.tail_widths * std::numbers::sqrt2 * problem_.pulse().sigma; }

    /// Cost at every scanned hold in [lo, hi].
    [[nodiscard]] std::vector<HoldCost> curve(double coupler_on, double qubit_on, double lo, double hi) const {
        std::vector<HoldCost> out;
        const double split = 2.0 * tail();
        for (double h = lo; h < std::min(split, hi + 1e-12); h += settings_.short_step) {
            out.push_back({h, short_cost(coupler_on, qubit_on, h)});
        }
        if (hi >= split) {
            long_costs(coupler_on, qubit_on, std::max(lo, split), hi, out);
        }
        return out;
    }

    [[nodiscard]] HoldCost best(double coupler_on, double qubit_on, double lo, double hi) const {
        HoldCost b;
        for (const auto& c : curve(coupler_on, qubit_on, lo, hi)) {
            if (c.cost < b.cost) {
                b = c;
            }
        }
        return b;
    }

private:
    using Cols = Eigen::Matrix<dynamics::cplx, Eigen::Dynamic, 4>;

    [[nodiscard]] double block_cost(const Cols& a, const Cols& b, const Eigen::VectorXcd& middle, double t_gate) const {
        // M = b^T diag(middle) a, then the rotating idle frame.
        Matrix4 m = b.transpose() * middle.asDiagonal() * a;
        for (int j = 0; j < 4; ++j) {
            m.row(j) *= std::polar(1.0, energy_[j] * t_gate);
        }
        return cost_from_matrix(m);
    }

    [[nodiscard]] double short_cost(double coupler_on, double qubit_on, double hold) const {
        return problem_.cost({hold, coupler_on, qubit_on});
    }

    void long_costs(double coupler_on, double qubit_on, double lo, double hi, std::vector<HoldCost>& out) const {
        const auto& sys = problem_.system();
        const auto& layout = problem_.layout();
        const auto& pulse = problem_.pulse();
        const double ramp = control::ramp_time(pulse.sigma);
        const double w = std::numbers::sqrt2 * pulse.sigma;
        const double span = 0.5 * ramp + tail();
        const auto n = static_cast<std::size_t>(std::ceil(span / problem_.dt() - 1e-9));
        const double h = span / static_cast<double>(n);
        auto edge = [&](double t, double off, double on) {
            return off + 0.5 * (on - off) * (1.0 + std::erf((t - 0.5 * ramp) / w));
        };

        dynamics::StepKernel kernel(sys, dynamics::Method::Chebyshev);
        Eigen::MatrixXcd psi = p_.cast<dynamics::cplx>();
        auto f = idle_;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = (static_cast<double>(k) + 0.5) * h;
            f[layout.tuned_qubit] = edge(t, pulse.qubit_idle, qubit_on);
            f[layout.coupler] = edge(t, pulse.coupler_idle, coupler_on);
            kernel.apply(sys.diagonal(f), h, psi);
        }

        f[layout.tuned_qubit] = qubit_on;
        f[layout.coupler] = coupler_on;
        Eigen::MatrixXd on = sys.coupling_matrix();
        on.diagonal() += sys.diagonal(f);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(on);
        const Cols a = es.eigenvectors().transpose().cast<dynamics::cplx>() * psi;
        const auto& e = es.eigenvalues();
        for (double hold = lo; hold <= hi + 1e-9; hold += settings_.long_step) {
            const double tau = hold - 2.0 * tail();
            const Eigen::VectorXcd phase = (e.cast<dynamics::cplx>() * dynamics::cplx(0.0, -tau)).array().exp().matrix();
            out.push_back({hold, block_cost(a, a, phase, hold + ramp)});
        }
    }

    CzGateProblem problem_;
    HoldScanSettings settings_;
    std::vector<double> idle_;
    Eigen::MatrixXd p_;
    double energy_[4] = {};
};

}  // namespace czforge::gateval
