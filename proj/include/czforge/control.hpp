#pragma once

// Flat-top error-function frequency pulses and multi-mode pulse schedules.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>
#include <vector>

#include "czforge/errors.hpp"

namespace czforge::control {

/// Ramp duration for a given Gaussian width: 4 sqrt(2) sigma.
inline double ramp_time(double sigma) { return 4.0 * std::numbers::sqrt2 * sigma; }

struct PulseSample {
    double value = 0.0;
    bool clamped = false;
};

/// omega(t) = off + (on - off)/2 [erf((t - t_r/2)/(sqrt2 s)) - erf((t - T + t_r/2)/(sqrt2 s))].
struct FlattopPulse {
    double omega_off = 0.0;  // GHz
    double omega_on = 0.0;   // GHz
    double sigma = 1.0;      // ns
    double t_gate = 0.0;     // ns

    [[nodiscard]] double ramp() const { return ramp_time(sigma); }

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw InvalidPulseError("pulse sigma must be positive");
        }
        // Relative slack so t_gate built as t_ramp + 0 passes.
        if (!(t_gate >= ramp() * (1.0 - 1e-12))) {
            std::ostringstream os;
            os << "t_gate = " << t_gate << " ns is shorter than the ramp time " << ramp() << " ns";
            throw InvalidPulseError(os.str());
        }
    }

    [[nodiscard]] PulseSample sample(double t) const {
        PulseSample s;
        if (t < 0.0) {
            t = 0.0;
            s.clamped = true;
        } else if (t > t_gate) {
            t = t_gate;
            s.clamped = true;
        }
        const double w = std::numbers::sqrt2 * sigma;
        const double half_ramp = 0.5 * ramp();
        s.value = omega_off + 0.5 * (omega_on - omega_off) *
                                  (std::erf((t - half_ramp) / w) - std::erf((t - t_gate + half_ramp) / w));
        return s;
    }

    [[nodiscard]] double eval(double t) const { return sample(t).value; }

    /// Duration between ramp midpoints, t_gate - t_ramp.
    [[nodiscard]] double hold_time() const {
        const double hold = t_gate - ramp();
        if (hold < 0.0) {
            if (hold > -1e-12 * t_gate) {
                return 0.0;
            }
            throw InvalidPulseError("negative hold time: t_gate is shorter than the ramp");
        }
        return hold;
    }
};

inline double hold_time(const FlattopPulse& p) { return p.hold_time(); }

inline FlattopPulse flattop_for_hold(double omega_off, double omega_on, double sigma, double t_hold) {
    if (!(t_hold >= 0.0)) {
        throw InvalidPulseError("hold time must be nonnegative");
    }
    FlattopPulse p{omega_off, omega_on, sigma, t_hold + ramp_time(sigma)};
    p.validate();
    return p;
}

/// Per-mode frequency trajectories sharing one gate duration. Modes without an
/// entry stay at their idle frequency.
class PulseSchedule {
public:
    using Drive = std::variant<FlattopPulse, double>;

    PulseSchedule(double t_gate, double dt) : t_gate_(t_gate), dt_(dt) {
        if (!(t_gate > 0.0)) {
            throw InvalidPulseError("schedule duration must be positive");
        }
        if (!(dt > 0.0)) {
            throw InvalidPulseError("sample step must be positive");
        }
    }

    void set(std::size_t mode, const FlattopPulse& p) {
        p.validate();
        if (std::abs(p.t_gate - t_gate_) > 1e-12 * std::max(1.0, t_gate_)) {
            throw InvalidPulseError("all pulses in a schedule must share t_gate");
        }
        drives_[mode] = p;
    }

    void set(std::size_t mode, double constant) { drives_[mode] = constant; }

    [[nodiscard]] double t_gate() const { return t_gate_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] const std::map<std::size_t, Drive>& drives() const { return drives_; }

    /// Per-mode frequencies at time t; undriven modes take idle[k].
    [[nodiscard]] std::vector<double> frequencies(double t, const std::vector<double>& idle) const {
        std::vector<double> f = idle;
        for (const auto& [mode, drive] : drives_) {
            if (mode >= f.size()) {
                throw InvalidPulseError("pulse targets a mode outside the system");
            }
            if (const auto* p = std::get_if<FlattopPulse>(&drive)) {
                f[mode] = p->eval(t);
            } else {
                f[mode] = std::get<double>(drive);
            }
        }
        return f;
    }

    /// Frequencies before and after the pulse (flat-top off values).
    [[nodiscard]] std::vector<double> idle_frequencies(const std::vector<double>& idle) const {
        std::vector<double> f = idle;
        for (const auto& [mode, drive] : drives_) {
            if (mode >= f.size()) {
                throw InvalidPulseError("pulse targets a mode outside the system");
            }
            if (const auto* p = std::get_if<FlattopPulse>(&drive)) {
                f[mode] = p->omega_off;
            } else {
                f[mode] = std::get<double>(drive);
            }
        }
        return f;
    }

private:
    double t_gate_;
    double dt_;
    std::map<std::size_t, Drive> drives_;
};

}  // namespace czforge::control
