#pragma once

// Experiment configuration: one JSON document with device, pulse, scenario
// and run sections. Missing keys take the shipped defaults; unknown keys are
// rejected so typos do not silently fall back to defaults.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "czforge/errors.hpp"
#include "czforge/model.hpp"
#include "czforge/quantize.hpp"

namespace czforge::experiments {

using json = nlohmann::json;

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"cz-demo", "sweep-hold", "sweep-delta", "spectator", "optimize",
                                                "spectrum"};
    return names;
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct SpectatorMode {
    double omega = 0.0;
    double alpha = -0.25;
};

/// Four-qubit lattice: Q1-Q2 gate pair plus spectators S1 (next to Q1) and S2 (next to Q2).
struct LatticeConfig {
    SpectatorMode s1{4.70, -0.25};
    SpectatorMode s2{4.05, -0.25};
    /// Spectator couplings; unset means "same as the gate pair".
    std::optional<double> g_direct;
    std::optional<double> g_coupler;
    int qubit_levels = 3;
    // Two-level couplers lose the doubly excited coupler state and overstate the
    // spectator ZZ about tenfold; three levels match the converged value.
    int coupler_levels = 3;
    int excitation_cutoff = 4;
    // RWA conserves excitation number, so the cutoff is exact in every spectator sector.
    model::CouplingForm form = model::CouplingForm::Rwa;
    /// Spectator coupler idle frequencies (C2, C3, C4); unset means "computed decoupling point".
    std::array<std::optional<double>, 3> coupler_idle{};
};

struct DeviceConfig {
    std::optional<quantize::ModeParams> mode_params;
    std::optional<quantize::CircuitParams> circuit_params;
    std::array<int, 3> levels{4, 4, 4};
    model::CouplingForm form = model::CouplingForm::Full;
    LatticeConfig lattice;

    /// Mode parameters for the gate pair, derived when circuit parameters are given.
    [[nodiscard]] quantize::ModeParams resolved() const {
        if (mode_params) {
            return *mode_params;
        }
        return quantize::derive_mode_params(*circuit_params);
    }
};

struct PulseConfig {
    double sigma = 2.0;       // ns
    double qubit_idle = 4.60;  // GHz
    /// Unset means "computed decoupling point inside decoupling_scan".
    std::optional<double> coupler_idle;
    Range decoupling_scan{5.0, 7.0};
    Range t_hold{5.0, 80.0};
    Range coupler_on{4.6, 5.5};
    Range qubit_on{4.3, 4.7};
};

struct GateParamsConfig {
    double t_hold = 0.0;
    double coupler_on = 0.0;
    double qubit_on = 0.0;
};

struct ScenarioConfig {
    std::string name = "cz-demo";
    /// Fixed pulse parameters; when set, scenarios skip the optimizer.
    std::optional<GateParamsConfig> params;
    /// Hold sweep, relative to the optimum: [t* - span, t* + span] with `points` samples.
    double hold_span = 4.0;
    int hold_points = 17;
    std::vector<double> deltas{0.0, 0.010, 0.020};  // GHz, alpha_2 -> alpha_2 - delta
    std::vector<std::string> spectator_states{"00", "01", "10", "11"};
    /// Multiplies g_12 before anything else (used to probe the speed/coupling relation).
    double g12_scale = 1.0;
    /// Force omega_on = omega_off for both pulses (identity-process control).
    bool zero_amplitude = false;
    /// Extra spectrum point: tuned-qubit frequency (unset -> omega_2 - alpha_1).
    std::optional<double> work_point;
};

/// Landscape scan that seeds the simplex: best cost over the hold range on a
/// (coupler_on, qubit_on) grid. The qubit window is relative to omega_2 - alpha_1.
struct ScanConfig {
    double coupler_step = 0.04;  // GHz
    double qubit_step = 0.005;   // GHz
    Range qubit_window{-0.08, 0.02};
    double short_hold_step = 1.0;  // ns
    double long_hold_step = 0.02;  // ns
    double dt = 0.1;               // ns
};

struct RunConfig {
    double dt = 0.01;  // ns
    std::string out = "results";
    int threads = 1;
    std::size_t max_iterations = 500;
    double tol_f = 1e-9;
    std::array<double, 3> tol_x{0.01, 1e-4, 1e-4};
    ScanConfig scan;
    /// Local minima of the scan refined by the simplex.
    int refine_seeds = 3;
    /// Refined candidates at or below this cost compete on gate duration.
    double accept_cost = 1e-6;
    bool half_dt_check = true;
    /// Record every n-th step of the optimized gate as a time series (0 = off).
    std::size_t series_every = 10;
};

struct ExperimentConfig {
    DeviceConfig device;
    PulseConfig pulse;
    ScenarioConfig scenario;
    RunConfig run;
};

/// Table I mode parameters with g_12 = 10 MHz, g_1c = g_2c = 100 MHz, alpha_c = -200 MHz.
/// The coupler frequency is a placeholder; its idle point comes from the pulse section.
inline quantize::ModeParams default_mode_params() {
    quantize::ModeParams m;
    m.omega_1 = 4.50;
    m.omega_2 = 4.25;
    m.omega_c = 5.55;
    m.alpha_1 = -0.25;
    m.alpha_2 = 0.25;
    m.alpha_c = -0.20;
    m.g_12 = 0.010;
    m.g_1c = 0.100;
    m.g_2c = 0.100;
    return m;
}

inline ExperimentConfig default_config() {
    ExperimentConfig c;
    c.device.mode_params = default_mode_params();
    return c;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return;
    }
    T v{};
    read(j, key, v, where);
    out = v;
}

inline void read_range(const json& j, const char* key, Range& r, const std::string& where) {
    if (!j.contains(key)) {
        return;
    }
    std::array<double, 2> v{};
    read(j, key, v, where);
    if (!(v[0] < v[1])) {
        throw ConfigError(where + "." + key + " must be [lo, hi] with lo < hi");
    }
    r = {v[0], v[1]};
}

inline void read_form(const json& j, model::CouplingForm& form, const std::string& where) {
    if (!j.contains("form")) {
        return;
    }
    std::string s;
    read(j, "form", s, where);
    if (s == "rwa") {
        form = model::CouplingForm::Rwa;
    } else if (s == "full") {
        form = model::CouplingForm::Full;
    } else {
        throw ConfigError(where + ".form must be \"rwa\" or \"full\"");
    }
}

inline json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace detail

inline json to_json(const quantize::ModeParams& m) {
    return {{"omega_1", m.omega_1}, {"omega_2", m.omega_2}, {"omega_c", m.omega_c}, {"alpha_1", m.alpha_1},
            {"alpha_2", m.alpha_2}, {"alpha_c", m.alpha_c}, {"g_12", m.g_12},       {"g_1c", m.g_1c},
            {"g_2c", m.g_2c},       {"coupling_sign", m.coupling_sign}};
}

inline quantize::ModeParams mode_params_from_json(const json& j) {
    const std::string w = "device.mode_params";
    detail::reject_unknown(j,
                           {"omega_1", "omega_2", "omega_c", "alpha_1", "alpha_2", "alpha_c", "g_12", "g_1c", "g_2c",
                            "coupling_sign"},
                           w);
    auto m = default_mode_params();
    detail::read(j, "omega_1", m.omega_1, w);
    detail::read(j, "omega_2", m.omega_2, w);
    detail::read(j, "omega_c", m.omega_c, w);
    detail::read(j, "alpha_1", m.alpha_1, w);
    detail::read(j, "alpha_2", m.alpha_2, w);
    detail::read(j, "alpha_c", m.alpha_c, w);
    detail::read(j, "g_12", m.g_12, w);
    detail::read(j, "g_1c", m.g_1c, w);
    detail::read(j, "g_2c", m.g_2c, w);
    detail::read(j, "coupling_sign", m.coupling_sign, w);
    for (double f : {m.omega_1, m.omega_2, m.omega_c}) {
        if (!(f > 0.0)) {
            throw ConfigError(w + ": frequencies must be positive");
        }
    }
    for (double g : {m.g_12, m.g_1c, m.g_2c}) {
        if (g < 0.0) {
            throw ConfigError(w + ": couplings are magnitudes; put the sign in coupling_sign");
        }
    }
    if (m.coupling_sign != 1 && m.coupling_sign != -1) {
        throw ConfigError(w + ".coupling_sign must be +1 or -1");
    }
    return m;
}

inline json to_json(const quantize::CircuitParams& p) {
    return {{"ec_1", p.ec_1},     {"ec_2", p.ec_2},     {"ec_c", p.ec_c},         {"ej_sum_1", p.ej_sum_1},
            {"ej_sum_c", p.ej_sum_c}, {"d_1", p.d_1},   {"d_c", p.d_c},           {"ej_2", p.ej_2},
            {"el_2", p.el_2},     {"flux_1", p.flux_1}, {"flux_2", p.flux_2},     {"flux_c", p.flux_c},
            {"c_1", p.c_1},       {"c_2", p.c_2},       {"c_c", p.c_c},           {"c_1c", p.c_1c},
            {"c_2c", p.c_2c},     {"c_12", p.c_12}};
}

inline quantize::CircuitParams circuit_params_from_json(const json& j) {
    const std::string w = "device.circuit_params";
    detail::reject_unknown(j,
                           {"ec_1", "ec_2", "ec_c", "ej_sum_1", "ej_sum_c", "d_1", "d_c", "ej_2", "el_2", "flux_1",
                            "flux_2", "flux_c", "c_1", "c_2", "c_c", "c_1c", "c_2c", "c_12"},
                           w);
    quantize::CircuitParams p;
    detail::read(j, "ec_1", p.ec_1, w);
    detail::read(j, "ec_2", p.ec_2, w);
    detail::read(j, "ec_c", p.ec_c, w);
    detail::read(j, "ej_sum_1", p.ej_sum_1, w);
    detail::read(j, "ej_sum_c", p.ej_sum_c, w);
    detail::read(j, "d_1", p.d_1, w);
    detail::read(j, "d_c", p.d_c, w);
    detail::read(j, "ej_2", p.ej_2, w);
    detail::read(j, "el_2", p.el_2, w);
    detail::read(j, "flux_1", p.flux_1, w);
    detail::read(j, "flux_2", p.flux_2, w);
    detail::read(j, "flux_c", p.flux_c, w);
    detail::read(j, "c_1", p.c_1, w);
    detail::read(j, "c_2", p.c_2, w);
    detail::read(j, "c_c", p.c_c, w);
    detail::read(j, "c_1c", p.c_1c, w);
    detail::read(j, "c_2c", p.c_2c, w);
    detail::read(j, "c_12", p.c_12, w);
    try {
        quantize::validate(p);
    } catch (const ParameterDomainError& e) {
        throw ConfigError(w + ": " + e.what());
    }
    return p;
}

inline json to_json(const ExperimentConfig& c) {
    json device;
    if (c.device.mode_params) {
        device["mode_params"] = to_json(*c.device.mode_params);
    }
    if (c.device.circuit_params) {
        device["circuit_params"] = to_json(*c.device.circuit_params);
    }
    device["levels"] = c.device.levels;
    device["form"] = model::to_string(c.device.form);
    const auto& l = c.device.lattice;
    device["lattice"] = {
        {"s1", {{"omega", l.s1.omega}, {"alpha", l.s1.alpha}}},
        {"s2", {{"omega", l.s2.omega}, {"alpha", l.s2.alpha}}},
        {"g_direct", detail::opt_json(l.g_direct)},
        {"g_coupler", detail::opt_json(l.g_coupler)},
        {"qubit_levels", l.qubit_levels},
        {"coupler_levels", l.coupler_levels},
        {"excitation_cutoff", l.excitation_cutoff},
        {"form", model::to_string(l.form)},
        {"coupler_idle",
         json::array({detail::opt_json(l.coupler_idle[0]), detail::opt_json(l.coupler_idle[1]),
                      detail::opt_json(l.coupler_idle[2])})},
    };

    json pulse = {
        {"sigma", c.pulse.sigma},
        {"qubit_idle", c.pulse.qubit_idle},
        {"coupler_idle", detail::opt_json(c.pulse.coupler_idle)},
        {"decoupling_scan", detail::range_json(c.pulse.decoupling_scan)},
        {"bounds",
         {{"t_hold", detail::range_json(c.pulse.t_hold)},
          {"coupler_on", detail::range_json(c.pulse.coupler_on)},
          {"qubit_on", detail::range_json(c.pulse.qubit_on)}}},
    };

    const auto& s = c.scenario;
    json scenario = {
        {"name", s.name},
        {"hold_span", s.hold_span},
        {"hold_points", s.hold_points},
        {"deltas", s.deltas},
        {"spectator_states", s.spectator_states},
        {"g12_scale", s.g12_scale},
        {"zero_amplitude", s.zero_amplitude},
        {"work_point", detail::opt_json(s.work_point)},
    };
    scenario["params"] = s.params ? json{{"t_hold", s.params->t_hold},
                                         {"coupler_on", s.params->coupler_on},
                                         {"qubit_on", s.params->qubit_on}}
                                  : json(nullptr);

    json run = {
        {"dt", c.run.dt},
        {"out", c.run.out},
        {"threads", c.run.threads},
        {"max_iterations", c.run.max_iterations},
        {"tol_f", c.run.tol_f},
        {"tol_x", c.run.tol_x},
        {"scan",
         {{"coupler_step", c.run.scan.coupler_step},
          {"qubit_step", c.run.scan.qubit_step},
          {"qubit_window", detail::range_json(c.run.scan.qubit_window)},
          {"short_hold_step", c.run.scan.short_hold_step},
          {"long_hold_step", c.run.scan.long_hold_step},
          {"dt", c.run.scan.dt}}},
        {"refine_seeds", c.run.refine_seeds},
        {"accept_cost", c.run.accept_cost},
        {"half_dt_check", c.run.half_dt_check},
        {"series_every", c.run.series_every},
    };
    return {{"device", device}, {"pulse", pulse}, {"scenario", scenario}, {"run", run}};
}

inline ExperimentConfig config_from_json(const json& j) {
    detail::reject_unknown(j, {"device", "pulse", "scenario", "run"}, "config");
    ExperimentConfig c;

    // device
    const json device = j.value("device", json::object());
    detail::reject_unknown(device, {"mode_params", "circuit_params", "levels", "form", "lattice"}, "device");
    const bool has_mode = device.contains("mode_params");
    const bool has_circuit = device.contains("circuit_params");
    if (has_mode == has_circuit) {
        throw ConfigError("device needs exactly one of mode_params or circuit_params");
    }
    if (has_mode) {
        c.device.mode_params = mode_params_from_json(device.at("mode_params"));
    } else {
        c.device.circuit_params = circuit_params_from_json(device.at("circuit_params"));
    }
    detail::read(device, "levels", c.device.levels, "device");
    for (int lv : c.device.levels) {
        if (lv < model::kMinLevels || lv > model::kMaxLevels) {
            throw ConfigError("device.levels entries must lie in [2, 6]");
        }
    }
    detail::read_form(device, c.device.form, "device");
    if (device.contains("lattice")) {
        const json& l = device.at("lattice");
        const std::string w = "device.lattice";
        detail::reject_unknown(
            l,
            {"s1", "s2", "g_direct", "g_coupler", "qubit_levels", "coupler_levels", "excitation_cutoff", "form",
             "coupler_idle"},
            w);
        auto& lat = c.device.lattice;
        for (auto [key, mode] : {std::pair{"s1", &lat.s1}, std::pair{"s2", &lat.s2}}) {
            if (l.contains(key)) {
                detail::reject_unknown(l.at(key), {"omega", "alpha"}, w + "." + key);
                detail::read(l.at(key), "omega", mode->omega, w + "." + key);
                detail::read(l.at(key), "alpha", mode->alpha, w + "." + key);
            }
        }
        detail::read_opt(l, "g_direct", lat.g_direct, w);
        detail::read_opt(l, "g_coupler", lat.g_coupler, w);
        detail::read(l, "qubit_levels", lat.qubit_levels, w);
        detail::read(l, "coupler_levels", lat.coupler_levels, w);
        detail::read(l, "excitation_cutoff", lat.excitation_cutoff, w);
        detail::read_form(l, lat.form, w);
        if (l.contains("coupler_idle")) {
            const json& ci = l.at("coupler_idle");
            if (!ci.is_array() || ci.size() != 3) {
                throw ConfigError(w + ".coupler_idle must be a 3-element array (number or null)");
            }
            for (std::size_t i = 0; i < 3; ++i) {
                if (!ci[i].is_null()) {
                    if (!ci[i].is_number()) {
                        throw ConfigError(w + ".coupler_idle entries must be numbers or null");
                    }
                    lat.coupler_idle[i] = ci[i].get<double>();
                }
            }
        }
        if (lat.excitation_cutoff < 2) {
            throw ConfigError(w + ".excitation_cutoff must be at least 2");
        }
    }

    // pulse
    const json pulse = j.value("pulse", json::object());
    detail::reject_unknown(pulse, {"sigma", "qubit_idle", "coupler_idle", "decoupling_scan", "bounds"}, "pulse");
    detail::read(pulse, "sigma", c.pulse.sigma, "pulse");
    detail::read(pulse, "qubit_idle", c.pulse.qubit_idle, "pulse");
    detail::read_opt(pulse, "coupler_idle", c.pulse.coupler_idle, "pulse");
    detail::read_range(pulse, "decoupling_scan", c.pulse.decoupling_scan, "pulse");
    if (pulse.contains("bounds")) {
        const json& b = pulse.at("bounds");
        detail::reject_unknown(b, {"t_hold", "coupler_on", "qubit_on"}, "pulse.bounds");
        detail::read_range(b, "t_hold", c.pulse.t_hold, "pulse.bounds");
        detail::read_range(b, "coupler_on", c.pulse.coupler_on, "pulse.bounds");
        detail::read_range(b, "qubit_on", c.pulse.qubit_on, "pulse.bounds");
    }
    if (!(c.pulse.sigma > 0.0)) {
        throw ConfigError("pulse.sigma must be positive");
    }
    if (c.pulse.t_hold.lo < 0.0) {
        throw ConfigError("pulse.bounds.t_hold must be nonnegative");
    }

    // scenario
    const json scenario = j.value("scenario", json::object());
    detail::reject_unknown(scenario,
                           {"name", "params", "hold_span", "hold_points", "deltas", "spectator_states", "g12_scale",
                            "zero_amplitude", "work_point"},
                           "scenario");
    auto& s = c.scenario;
    detail::read(scenario, "name", s.name, "scenario");
    if (scenario.contains("params") && !scenario.at("params").is_null()) {
        const json& p = scenario.at("params");
        detail::reject_unknown(p, {"t_hold", "coupler_on", "qubit_on"}, "scenario.params");
        for (const char* key : {"t_hold", "coupler_on", "qubit_on"}) {
            if (!p.contains(key)) {
                throw ConfigError(std::string("scenario.params.") + key + " is required");
            }
        }
        GateParamsConfig gp;
        detail::read(p, "t_hold", gp.t_hold, "scenario.params");
        detail::read(p, "coupler_on", gp.coupler_on, "scenario.params");
        detail::read(p, "qubit_on", gp.qubit_on, "scenario.params");
        s.params = gp;
    }
    detail::read(scenario, "hold_span", s.hold_span, "scenario");
    detail::read(scenario, "hold_points", s.hold_points, "scenario");
    detail::read(scenario, "deltas", s.deltas, "scenario");
    detail::read(scenario, "spectator_states", s.spectator_states, "scenario");
    detail::read(scenario, "g12_scale", s.g12_scale, "scenario");
    detail::read(scenario, "zero_amplitude", s.zero_amplitude, "scenario");
    detail::read_opt(scenario, "work_point", s.work_point, "scenario");
    for (const auto& st : s.spectator_states) {
        if (st.size() != 2 || (st[0] != '0' && st[0] != '1') || (st[1] != '0' && st[1] != '1')) {
            throw ConfigError("scenario.spectator_states entries must be two-bit strings like \"01\"");
        }
    }
    if (s.hold_points < 1) {
        throw ConfigError("scenario.hold_points must be at least 1");
    }

    // run
    const json run = j.value("run", json::object());
    detail::reject_unknown(run,
                           {"dt", "out", "threads", "max_iterations", "tol_f", "tol_x", "scan", "refine_seeds", "accept_cost",
                            "half_dt_check", "series_every"},
                           "run");
    detail::read(run, "dt", c.run.dt, "run");
    detail::read(run, "out", c.run.out, "run");
    detail::read(run, "threads", c.run.threads, "run");
    detail::read(run, "max_iterations", c.run.max_iterations, "run");
    detail::read(run, "tol_f", c.run.tol_f, "run");
    detail::read(run, "tol_x", c.run.tol_x, "run");
    if (run.contains("scan")) {
        const json& sc = run.at("scan");
        detail::reject_unknown(
            sc, {"coupler_step", "qubit_step", "qubit_window", "short_hold_step", "long_hold_step", "dt"}, "run.scan");
        auto& g = c.run.scan;
        detail::read(sc, "coupler_step", g.coupler_step, "run.scan");
        detail::read(sc, "qubit_step", g.qubit_step, "run.scan");
        detail::read_range(sc, "qubit_window", g.qubit_window, "run.scan");
        detail::read(sc, "short_hold_step", g.short_hold_step, "run.scan");
        detail::read(sc, "long_hold_step", g.long_hold_step, "run.scan");
        detail::read(sc, "dt", g.dt, "run.scan");
        for (double v : {g.coupler_step, g.qubit_step, g.short_hold_step, g.long_hold_step, g.dt}) {
            if (!(v > 0.0)) {
                throw ConfigError("run.scan steps must be positive");
            }
        }
    }
    detail::read(run, "refine_seeds", c.run.refine_seeds, "run");
    detail::read(run, "accept_cost", c.run.accept_cost, "run");
    detail::read(run, "half_dt_check", c.run.half_dt_check, "run");
    detail::read(run, "series_every", c.run.series_every, "run");
    if (!(c.run.dt > 0.0)) {
        throw ConfigError("run.dt must be positive");
    }
    if (c.run.threads < 1 || c.run.refine_seeds < 1) {
        throw ConfigError("run.threads and run.refine_seeds must be at least 1");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Hash of the fully resolved configuration (defaults filled, overrides applied).
inline std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(to_json(c).dump());
    return os.str();
}

}  // namespace czforge::experiments
