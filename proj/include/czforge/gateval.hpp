#pragma once

// Two-qubit gate metrics on the computational block (|00>, |01>, |10>, |11>):
// average gate fidelity, conditional phase, leakage/swap errors and the
// phase + leakage optimization cost.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "czforge/errors.hpp"

namespace czforge::gateval {

using cplx = std::complex<double>;
using Matrix4 = Eigen::Matrix4cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kUndefinedPhaseThreshold = 1e-6;

// Index of each computational state in the 4x4 block.
inline constexpr int k00 = 0;
inline constexpr int k01 = 1;
inline constexpr int k10 = 2;
inline constexpr int k11 = 3;

inline Matrix4 cz_matrix() {
    Matrix4 u = Matrix4::Identity();
    u(k11, k11) = -1.0;
    return u;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_phase(double x) {
    double y = std::remainder(x, 2.0 * kPi);
    if (y <= -kPi) {
        y += 2.0 * kPi;
    }
    return y;
}

/// (|Tr(U_id^dag U)|^2 + Tr(U^dag U)) / (d (d + 1)).
template <class A, class B>
double avg_gate_fidelity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& u_id) {
    const double d = static_cast<double>(u.rows());
    const cplx overlap = (u_id.adjoint() * u).trace();
    const double norm = (u.adjoint() * u).trace().real();
    return (std::norm(overlap) + norm) / (d * (d + 1.0));
}

struct CorrectedGate {
    Matrix4 matrix;
    double theta_a = 0.0;  // Z on the first qubit (acts on |10>, |11>)
    double theta_b = 0.0;  // Z on the second qubit (acts on |01>, |11>)
    double global = 0.0;
};

/// Virtual-Z correction: fixes arg M00 = arg M01 = arg M10 = 0 and leaves the
/// conditional phase on M11.
inline CorrectedGate remove_single_qubit_phases(const Matrix4& m) {
    for (int j : {k00, k01, k10}) {
        if (std::abs(m(j, j)) < kUndefinedPhaseThreshold) {
            std::ostringstream os;
            os << "diagonal element " << j << " vanishes; single-qubit phase undefined";
            throw PhaseUndefinedError(os.str());
        }
    }
    CorrectedGate out;
    out.global = -std::arg(m(k00, k00));
    out.theta_a = -std::arg(m(k10, k10)) - out.global;
    out.theta_b = -std::arg(m(k01, k01)) - out.global;
    Eigen::Vector4cd z;
    z << 1.0, std::polar(1.0, out.theta_b), std::polar(1.0, out.theta_a), std::polar(1.0, out.theta_a + out.theta_b);
    out.matrix = std::polar(1.0, out.global) * (z.asDiagonal() * m);
    return out;
}

/// arg<11> - arg<01> - arg<10> + arg<00>, wrapped to (-pi, pi]. Overlaps are
/// <psi_jk | psi_f(jk)>, ordered (00, 01, 10, 11).
inline double conditional_phase(const std::array<cplx, 4>& overlaps) {
    for (const auto& z : overlaps) {
        if (std::abs(z) < kUndefinedPhaseThreshold) {
            throw PhaseUndefinedError("overlap too small to define a conditional phase");
        }
    }
    return wrap_phase(std::arg(overlaps[k11]) - std::arg(overlaps[k01]) - std::arg(overlaps[k10]) +
                      std::arg(overlaps[k00]));
}

inline double conditional_phase(const Matrix4& m) {
    return conditional_phase(std::array<cplx, 4>{m(k00, k00), m(k01, k01), m(k10, k10), m(k11, k11)});
}

struct LeakSwap {
    double eps_leak = 0.0;
    double eps_swap = 0.0;
};

/// eps_leak = 1 - P11 (from |11>), eps_swap = 1 - P01 (from |01>).
inline LeakSwap leakage_and_swap(double p11, double p01) {
    auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
    return {clamp01(1.0 - p11), clamp01(1.0 - p01)};
}

inline LeakSwap leakage_and_swap(const Matrix4& m) {
    return leakage_and_swap(std::norm(m(k11, k11)), std::norm(m(k01, k01)));
}

inline double phase_cost(double theta) {
    const double dev = std::abs(theta) - kPi;
    return dev * dev;
}

/// Mean out-of-block population over the four computational inputs (columns).
inline double leakage_cost(const Matrix4& m) {
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        total += std::max(0.0, 1.0 - m.col(k).squaredNorm());
    }
    return total / 4.0;
}

struct GateReport {
    Matrix4 u_comp;       // raw block in the rotating idle frame
    Matrix4 u_corrected;  // after virtual-Z correction
    double theta = 0.0;
    double fidelity = 0.0;
    double eps_leak = 0.0;
    double eps_swap = 0.0;
    double c_phase = 0.0;
    double c_leak = 0.0;
    double cost = 0.0;
    double theta_a = 0.0;
    double theta_b = 0.0;

    [[nodiscard]] double infidelity() const { return 1.0 - fidelity; }
    /// Largest of the three reported error figures.
    [[nodiscard]] double gate_error() const { return std::max({1.0 - fidelity, eps_leak, eps_swap}); }
};

inline double cost_from_matrix(const Matrix4& m) {
    return phase_cost(conditional_phase(m)) + leakage_cost(m);
}

inline GateReport score(const Matrix4& m) {
    GateReport r;
    r.u_comp = m;
    const auto corrected = remove_single_qubit_phases(m);
    r.u_corrected = corrected.matrix;
    r.theta_a = corrected.theta_a;
    r.theta_b = corrected.theta_b;
    r.theta = conditional_phase(m);
    r.fidelity = std::min(1.0, std::max(0.0, avg_gate_fidelity(r.u_corrected, cz_matrix())));
    const auto ls = leakage_and_swap(m);
    r.eps_leak = ls.eps_leak;
    r.eps_swap = ls.eps_swap;
    r.c_phase = phase_cost(r.theta);
    r.c_leak = leakage_cost(m);
    r.cost = r.c_phase + r.c_leak;
    return r;
}

}  // namespace czforge::gateval
