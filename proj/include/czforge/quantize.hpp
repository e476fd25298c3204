#pragma once

// Circuit quantization: raw circuit energies and capacitances -> mode-level
// frequencies, anharmonicities and coupling strengths.
//
// All energies are linear frequencies in GHz (h = 1). Capacitances are in fF.
// Flux is in units of the flux quantum.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "czforge/errors.hpp"

namespace czforge::quantize {

/// e^2 / (2 h * 1 fF) in GHz: the charging energy of a 1 fF capacitor.
inline constexpr double kChargingEnergyGHzfF = [] {
    constexpr double e = 1.602176634e-19;  // C
    constexpr double h = 6.62607015e-34;   // J s
    return e * e / (2.0 * 1e-15) / h * 1e-9;
}();

/// E_C (GHz) of a capacitance C (fF).
inline double charging_energy(double capacitance_fF) { return kChargingEnergyGHzfF / capacitance_fF; }

struct CircuitParams {
    // Charging energies
    double ec_1 = 0.0;
    double ec_2 = 0.0;
    double ec_c = 0.0;
    // SQUID totals and asymmetries for the tunable transmon and the coupler
    double ej_sum_1 = 0.0;
    double ej_sum_c = 0.0;
    double d_1 = 0.0;
    double d_c = 0.0;
    // Inductively shunted transmon
    double ej_2 = 0.0;
    double el_2 = 0.0;
    // Flux biases
    double flux_1 = 0.0;
    double flux_2 = 0.5;
    double flux_c = 0.0;
    // Capacitances
    double c_1 = 0.0;
    double c_2 = 0.0;
    double c_c = 0.0;
    double c_1c = 0.0;
    double c_2c = 0.0;
    double c_12 = 0.0;
};

struct ModeParams {
    double omega_1 = 0.0;
    double omega_2 = 0.0;
    double omega_c = 0.0;
    double alpha_1 = 0.0;
    double alpha_2 = 0.0;
    double alpha_c = 0.0;
    double g_12 = 0.0;
    double g_1c = 0.0;
    double g_2c = 0.0;
    /// Sign the circuit formulas attach to the couplings; the stored g's are magnitudes.
    int coupling_sign = +1;
};

struct ModeFrequency {
    double omega = 0.0;
    double alpha = 0.0;
};

struct CouplingStrengths {
    double g_12 = 0.0;
    double g_1c = 0.0;
    double g_2c = 0.0;
};

/// Phase zero-point scales xi_k = 8 E_C / E_J,eff per mode; phi_zpf ~ xi^(1/4).
struct ZeroPointScales {
    double xi_1 = 0.0;
    double xi_2 = 0.0;
    double xi_c = 0.0;
};

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << name << " must be positive and finite (got " << v << ")";
        throw ParameterDomainError(os.str());
    }
}

inline void require_asymmetry(double d, const char* name) {
    if (!(std::abs(d) <= 1.0)) {
        std::ostringstream os;
        os << name << " must satisfy |d| <= 1 (got " << d << ")";
        throw ParameterDomainError(os.str());
    }
}

}  // namespace detail

/// Flux-tunable SQUID Josephson energy E_JSum * sqrt(cos^2(pi f) + d^2 sin^2(pi f)).
inline double tunable_ej(double ej_sum, double d, double flux) {
    detail::require_positive(ej_sum, "ej_sum");
    detail::require_asymmetry(d, "d");
    const double c = std::cos(std::numbers::pi * flux);
    const double s = std::sin(std::numbers::pi * flux);
    return ej_sum * std::sqrt(c * c + d * d * s * s);
}

inline constexpr double kTransmonRegimeRatio = 20.0;

/// Transmon oscillator approximation: omega = sqrt(8 E_C E_J) - E_C, alpha = -E_C.
inline ModeFrequency transmon_modes(double ec, double ej) {
    detail::require_positive(ec, "ec");
    detail::require_positive(ej, "ej");
    if (ej / ec < kTransmonRegimeRatio) {
        std::ostringstream os;
        os << "E_J/E_C = " << ej / ec << " is below the transmon regime (" << kTransmonRegimeRatio << ")";
        warn(os.str());
    }
    return {std::sqrt(8.0 * ec * ej) - ec, -ec};
}

/// Inductively shunted transmon at half flux, expanded about the single-well minimum.
inline ModeFrequency ist_modes(double ec, double ej, double el) {
    detail::require_positive(ec, "ec");
    detail::require_positive(el, "el");
    if (!(ej >= 0.0)) {
        throw ParameterDomainError("ej must be nonnegative");
    }
    if (!(el > ej)) {
        std::ostringstream os;
        os << "single-well condition E_L > E_J violated (E_L = " << el << ", E_J = " << ej << ")";
        throw SingleWellError(os.str());
    }
    const double stiffness = el - ej;
    return {std::sqrt(8.0 * ec * stiffness) + ec * ej / stiffness, 0.5 * ec * ej / stiffness};
}

inline void validate(const CircuitParams& p) {
    using detail::require_positive;
    require_positive(p.ec_1, "ec_1");
    require_positive(p.ec_2, "ec_2");
    require_positive(p.ec_c, "ec_c");
    require_positive(p.ej_sum_1, "ej_sum_1");
    require_positive(p.ej_sum_c, "ej_sum_c");
    require_positive(p.ej_2, "ej_2");
    require_positive(p.el_2, "el_2");
    detail::require_asymmetry(p.d_1, "d_1");
    detail::require_asymmetry(p.d_c, "d_c");
    require_positive(p.c_1, "c_1");
    require_positive(p.c_2, "c_2");
    if (!(p.c_c > 0.0)) {
        throw ParameterDomainError("c_c must be positive (coupler bridge term divides by it)");
    }
    for (double c : {p.c_1c, p.c_2c, p.c_12}) {
        if (!(c >= 0.0)) {
            throw ParameterDomainError("coupling capacitances must be nonnegative");
        }
    }
    if (!(p.el_2 > p.ej_2)) {
        throw SingleWellError("IST requires el_2 > ej_2");
    }
}

inline ZeroPointScales zero_point_scales(const CircuitParams& p) {
    const double ej1 = tunable_ej(p.ej_sum_1, p.d_1, p.flux_1);
    const double ejc = tunable_ej(p.ej_sum_c, p.d_c, p.flux_c);
    detail::require_positive(ej1, "E_J,1 at bias");
    detail::require_positive(ejc, "E_J,c at bias");
    if (!(p.el_2 > p.ej_2)) {
        throw SingleWellError("IST requires el_2 > ej_2");
    }
    return {8.0 * p.ec_1 / ej1, 8.0 * p.ec_2 / (p.el_2 - p.ej_2), 8.0 * p.ec_c / ejc};
}

/// Charge-coupling strengths with the circuit-derived (negative) sign.
inline CouplingStrengths coupling_strengths(const CircuitParams& p, const ZeroPointScales& z) {
    if (!(p.c_c > 0.0)) {
        throw ParameterDomainError("c_c must be positive (coupler bridge term divides by it)");
    }
    // (2e)^2 C_ij / (2 C_i C_j) in GHz; the 1/2 absorbs the 1/sqrt(2) of each n_zpf.
    const double k = 4.0 * kChargingEnergyGHzfF;
    const double bridge = p.c_12 + p.c_1c * p.c_2c / p.c_c;
    CouplingStrengths g;
    g.g_12 = -k * bridge / (p.c_1 * p.c_2) * std::pow(z.xi_1 * z.xi_2, -0.25);
    g.g_1c = -k * p.c_1c / (p.c_1 * p.c_c) * std::pow(z.xi_1 * z.xi_c, -0.25);
    g.g_2c = -k * p.c_2c / (p.c_2 * p.c_c) * std::pow(z.xi_2 * z.xi_c, -0.25);
    return g;
}

inline CouplingStrengths coupling_strengths(const CircuitParams& p) {
    validate(p);
    return coupling_strengths(p, zero_point_scales(p));
}

/// Full circuit -> mode reduction. Couplings are stored as magnitudes with the sign recorded.
inline ModeParams derive_mode_params(const CircuitParams& p) {
    validate(p);
    const double half_flux_offset = std::remainder(p.flux_2 - 0.5, 1.0);
    if (std::abs(half_flux_offset) > 1e-9) {
        warn("IST closed forms assume half-flux bias; flux_2 = " + std::to_string(p.flux_2));
    }
    const ModeFrequency q1 = transmon_modes(p.ec_1, tunable_ej(p.ej_sum_1, p.d_1, p.flux_1));
    const ModeFrequency q2 = ist_modes(p.ec_2, p.ej_2, p.el_2);
    const ModeFrequency c = transmon_modes(p.ec_c, tunable_ej(p.ej_sum_c, p.d_c, p.flux_c));
    const CouplingStrengths g = coupling_strengths(p);

    ModeParams m;
    m.omega_1 = q1.omega;
    m.alpha_1 = q1.alpha;
    m.omega_2 = q2.omega;
    m.alpha_2 = q2.alpha;
    m.omega_c = c.omega;
    m.alpha_c = c.alpha;
    m.g_12 = std::abs(g.g_12);
    m.g_1c = std::abs(g.g_1c);
    m.g_2c = std::abs(g.g_2c);
    m.coupling_sign = (g.g_12 + g.g_1c + g.g_2c) < 0.0 ? -1 : +1;
    return m;
}

}  // namespace czforge::quantize
