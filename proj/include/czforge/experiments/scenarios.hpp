#pragma once

// Scenario runners behind the czforge CLI. Each runner takes a resolved
// configuration, writes its JSON/CSV outputs through a ResultWriter and returns
// the JSON summary plus an exit status.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "czforge/control.hpp"
#include "czforge/dynamics.hpp"
#include "czforge/experiments/config.hpp"
#include "czforge/experiments/device.hpp"
#include "czforge/experiments/output.hpp"
#include "czforge/experiments/parallel.hpp"
#include "czforge/gate_problem.hpp"
#include "czforge/gateval.hpp"
#include "czforge/hold_scan.hpp"
#include "czforge/optimizer.hpp"

#ifndef CZFORGE_VERSION
#define CZFORGE_VERSION "0.0.0"
#endif

namespace czforge::experiments {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUnconverged = 2;
inline constexpr int kExitConfig = 3;

/// Relative tolerance of the half-dt spot check.
inline constexpr double kHalfDtTolerance = 0.10;
/// Error figures below this are dominated by integration round-off and are
/// compared absolutely in the half-dt check.
inline constexpr double kHalfDtFloor = 1e-7;
/// Spectator cutoff check: relative change of the gate error allowed for cutoff + 1.
inline constexpr double kCutoffTolerance = 0.20;

struct ScenarioResult {
    json summary;
    int exit_code = kExitOk;
};

// ---------------------------------------------------------------------------
// JSON helpers

inline json matrix_json(const gateval::Matrix4& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) {
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

inline json params_json(const gateval::GateParams& p) {
    return {{"t_hold", p.t_hold}, {"coupler_on", p.coupler_on}, {"qubit_on", p.qubit_on}};
}

inline json report_json(const gateval::GateReport& r) {
    return {{"u_comp", matrix_json(r.u_comp)},
            {"u_corrected", matrix_json(r.u_corrected)},
            {"theta", r.theta},
            {"fidelity", r.fidelity},
            {"infidelity", r.infidelity()},
            {"eps_leak", r.eps_leak},
            {"eps_swap", r.eps_swap},
            {"gate_error", r.gate_error()},
            {"cost", r.cost},
            {"c_phase", r.c_phase},
            {"c_leak", r.c_leak},
            {"theta_a", r.theta_a},
            {"theta_b", r.theta_b}};
}

inline json provenance_json(const ExperimentConfig& cfg, const std::string& hash) {
    return {{"config_hash", hash}, {"code_version", CZFORGE_VERSION}, {"dt", cfg.run.dt}, {"config", to_json(cfg)}};
}

inline std::string fixed(double x) {
    std::ostringstream os;
    os << std::setprecision(15) << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// Gate evaluation and optimization

/// Gate report with propagation details.
struct GateEvaluation {
    gateval::GateParams params;
    gateval::GateReport report;
    double t_gate = 0.0;
    double dt = 0.0;
    double unitarity_defect = 0.0;
};

inline GateEvaluation evaluate_gate(const gateval::CzGateProblem& problem, const gateval::GateParams& p,
                                    const Occupation& background, dynamics::EvolveOptions opts = {},
                                    dynamics::TimeSeries* series = nullptr) {
    const auto ev = problem.evolve(p, {background}, opts);
    GateEvaluation out;
    out.params = p;
    out.report = gateval::score(problem.block(ev, background));
    out.t_gate = ev.t_gate;
    out.dt = ev.dt;
    out.unitarity_defect = ev.unitarity_defect;
    if (series) {
        *series = ev.series;
    }
    return out;
}

inline json evaluation_json(const GateEvaluation& e) {
    json j = report_json(e.report);
    j["params"] = params_json(e.params);
    j["t_gate"] = e.t_gate;
    j["dt"] = e.dt;
    j["unitarity_defect"] = e.unitarity_defect;
    return j;
}

struct HalfDtCheck {
    GateEvaluation half;
    double max_relative_change = 0.0;
    bool passed = true;
};

inline double relative_change(double a, double b) {
    const double diff = std::abs(a - b);
    if (std::max(std::abs(a), std::abs(b)) < kHalfDtFloor) {
        return diff / kHalfDtFloor;
    }
    return diff / std::max(std::abs(a), std::abs(b));
}

/// Re-evaluates at dt/2 and compares leak, swap and 1 - F.
inline HalfDtCheck half_dt_check(const gateval::CzGateProblem& problem, const GateEvaluation& full,
                                 const Occupation& background) {
    HalfDtCheck c;
    c.half = evaluate_gate(problem.with_dt(problem.dt() / 2.0), full.params, background);
    const auto& a = full.report;
    const auto& b = c.half.report;
    c.max_relative_change = std::max({relative_change(a.eps_leak, b.eps_leak),
                                      relative_change(a.eps_swap, b.eps_swap),
                                      relative_change(a.infidelity(), b.infidelity())});
    c.passed = c.max_relative_change < kHalfDtTolerance;
    if (!c.passed) {
        std::ostringstream os;
        os << "half-dt spot check changed the gate errors by " << 100.0 * c.max_relative_change
           << "%; consider a smaller dt";
        warn(os.str());
    }
    return c;
}

inline json half_dt_json(const HalfDtCheck& c) {
    return {{"dt", c.half.dt},
            {"eps_leak", c.half.report.eps_leak},
            {"eps_swap", c.half.report.eps_swap},
            {"infidelity", c.half.report.infidelity()},
            {"max_relative_change", c.max_relative_change},
            {"passed", c.passed}};
}

struct SeedPoint {
    gateval::GateParams p;
    double cost = 0.0;
};

struct Candidate {
    SeedPoint seed;
    optimizer::OptimizationRun run;
};

struct GateOptimization {
    std::vector<SeedPoint> scan;       // best hold per (coupler_on, qubit_on) cell
    std::vector<Candidate> candidates;  // simplex refinements of the best local minima
    std::size_t chosen = 0;
    int width = 1;
    optimizer::OptimizationRun run;  // the chosen refinement
    gateval::GateParams best;
    GateEvaluation evaluation;
};

inline std::vector<double> axis_points(double lo, double hi, double step) {
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double x = lo + step * i;
        if (x > hi + 1e-9) {
            break;
        }
        out.push_back(x);
    }
    return out;
}

/// Qubit-on axis of the scan: a window around omega_2 - alpha_1 (the |110> = |200>
/// resonance), clamped into the bounds.
inline std::vector<double> qubit_axis(const ExperimentConfig& cfg, const quantize::ModeParams& m) {
    const double center = m.omega_2 - m.alpha_1;
    const auto& b = cfg.pulse.qubit_on;
    const double lo = std::clamp(center + cfg.run.scan.qubit_window.lo, b.lo, b.hi);
    const double hi = std::clamp(center + cfg.run.scan.qubit_window.hi, b.lo, b.hi);
    return axis_points(lo, hi, cfg.run.scan.qubit_step);
}

/// Cells of a row-major grid whose cost is no larger than any of their 8
/// neighbours, sorted by cost (stable, so ties keep grid order).
inline std::vector<std::size_t> local_minima(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double c = cost[i * cols + j];
            if (!std::isfinite(c)) {
                continue;
            }
            bool low = true;
            for (int di = -1; di <= 1 && low; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const auto a = static_cast<std::ptrdiff_t>(i) + di;
                    const auto b = static_cast<std::ptrdiff_t>(j) + dj;
                    if ((di || dj) && a >= 0 && b >= 0 && a < static_cast<std::ptrdiff_t>(rows) &&
                        b < static_cast<std::ptrdiff_t>(cols) &&
                        cost[static_cast<std::size_t>(a) * cols + static_cast<std::size_t>(b)] < c) {
                        low = false;
                        break;
                    }
                }
            }
            if (low) {
                out.push_back(i * cols + j);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
    return out;
}

inline optimizer::NelderMeadConfig simplex_config(const ExperimentConfig& cfg, const gateval::GateParams& p0) {
    optimizer::NelderMeadConfig nm;
    nm.p0 = p0.to_vector();
    nm.bounds = {{cfg.pulse.t_hold.lo, cfg.pulse.t_hold.hi},
                 {cfg.pulse.coupler_on.lo, cfg.pulse.coupler_on.hi},
                 {cfg.pulse.qubit_on.lo, cfg.pulse.qubit_on.hi}};
    nm.tol_f = cfg.run.tol_f;
    nm.tol_x.assign(cfg.run.tol_x.begin(), cfg.run.tol_x.end());
    nm.max_iterations = cfg.run.max_iterations;
    return nm;
}

/// Candidate choice: the shortest hold among refinements meeting accept_cost,
/// otherwise the lowest cost. First index wins ties.
inline std::size_t choose_candidate(const std::vector<Candidate>& cands, double accept_cost) {
    std::size_t best = 0;
    bool accepted = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& r = cands[i].run;
        const bool ok = r.best_cost <= accept_cost;
        if (ok && (!accepted || r.best_p[0] < cands[best].run.best_p[0])) {
            best = i;
            accepted = true;
        } else if (!accepted && r.best_cost < cands[best].run.best_cost) {
            best = i;
        }
    }
    return best;
}

/// Landscape scan over (coupler_on, qubit_on) with the best hold per cell, then
/// Nelder-Mead from the lowest local minima.
inline GateOptimization optimize_gate(const gateval::CzGateProblem& problem, const ExperimentConfig& cfg,
                                      const quantize::ModeParams& m) {
    GateOptimization out;
    out.width = parallel_width(cfg.run.threads);
    const auto& sc = cfg.run.scan;
    gateval::HoldScanSettings hs;
    hs.short_step = sc.short_hold_step;
    hs.long_step = sc.long_hold_step;
    hs.dt = sc.dt;
    const gateval::HoldScanner scanner(problem, hs);

    const auto cs = axis_points(cfg.pulse.coupler_on.lo, cfg.pulse.coupler_on.hi, sc.coupler_step);
    const auto qs = qubit_axis(cfg, m);
    const auto cells = parallel_map<gateval::HoldCost>(cs.size() * qs.size(), out.width, [&](std::size_t k) {
        return scanner.best(cs[k / qs.size()], qs[k % qs.size()], cfg.pulse.t_hold.lo, cfg.pulse.t_hold.hi);
    });
    std::vector<double> costs;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        out.scan.push_back({{cells[k].t_hold, cs[k / qs.size()], qs[k % qs.size()]}, cells[k].cost});
        costs.push_back(cells[k].cost);
    }

    auto minima = local_minima(costs, cs.size(), qs.size());
    if (minima.empty()) {
        // Nothing finite on the grid: start from the middle of the box.
        out.scan.push_back({{0.5 * (cfg.pulse.t_hold.lo + cfg.pulse.t_hold.hi),
                             0.5 * (cfg.pulse.coupler_on.lo + cfg.pulse.coupler_on.hi), qs.empty() ? 0.5 * (cfg.pulse.qubit_on.lo + cfg.pulse.qubit_on.hi) : qs[qs.size() / 2]},
                            std::numeric_limits<double>::infinity()});
        minima.push_back(out.scan.size() - 1);
    }
    minima.resize(std::min<std::size_t>(minima.size(), static_cast<std::size_t>(cfg.run.refine_seeds)));
    out.candidates = parallel_map<Candidate>(minima.size(), out.width, [&](std::size_t i) {
        const auto& seed = out.scan[minima[i]];
        auto run = optimizer::minimize(
            [&](const optimizer::Point& v) { return problem.cost(gateval::GateParams::from_vector(v)); },
            simplex_config(cfg, seed.p));
        return Candidate{seed, std::move(run)};
    });
    out.chosen = choose_candidate(out.candidates, cfg.run.accept_cost);
    out.run = out.candidates[out.chosen].run;
    out.best = gateval::GateParams::from_vector(out.run.best_p);
    out.evaluation = evaluate_gate(problem, out.best, problem.ground());
    return out;
}

inline json optimization_json(const GateOptimization& o) {
    json cands = json::array();
    for (const auto& c : o.candidates) {
        cands.push_back({{"seed", params_json(c.seed.p)},
                         {"seed_cost", c.seed.cost},
                         {"best", params_json(gateval::GateParams::from_vector(c.run.best_p))},
                         {"best_cost", c.run.best_cost},
                         {"converged", c.run.converged},
                         {"stop_reason", c.run.stop_reason},
                         {"evaluations", c.run.trace.size()}});
    }
    return {{"scan_cells", o.scan.size()},
            {"parallel_width", o.width},
            {"candidates", cands},
            {"chosen", o.chosen},
            {"converged", o.run.converged},
            {"stop_reason", o.run.stop_reason},
            {"iterations", o.run.iterations},
            {"evaluations", o.run.trace.size()},
            {"best_cost", o.run.best_cost},
            {"best", params_json(o.best)}};
}

inline std::string trace_csv(const optimizer::OptimizationRun& run) {
    std::ostringstream os;
    run.write_csv(os, {"t_hold", "omega_c_on", "omega_q_on"});
    return os.str();
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double axis = 0.0;
    GateEvaluation eval;
};

inline std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << axis << ",t_gate,eps_leak,eps_swap,theta,fidelity,cost\n" << std::setprecision(15);
    for (const auto& r : rows) {
        const auto& g = r.eval.report;
        os << r.axis << ',' << r.eval.t_gate << ',' << g.eps_leak << ',' << g.eps_swap << ',' << g.theta << ','
           << g.fidelity << ',' << g.cost << '\n';
    }
    return os.str();
}

inline std::vector<double> hold_axis(const ExperimentConfig& cfg, double center) {
    const int n = cfg.scenario.hold_points;
    std::vector<double> out;
    const double lo = std::max(0.0, center - cfg.scenario.hold_span);
    const double hi = center + cfg.scenario.hold_span;
    for (int i = 0; i < n; ++i) {
        out.push_back(n == 1 ? center : lo + (hi - lo) * i / (n - 1));
    }
    return out;
}

inline std::vector<SweepRow> sweep_hold(const gateval::CzGateProblem& problem, const ExperimentConfig& cfg,
                                        const gateval::GateParams& center) {
    const auto axis = hold_axis(cfg, center.t_hold);
    return parallel_map<SweepRow>(axis.size(), parallel_width(cfg.run.threads), [&](std::size_t i) {
        gateval::GateParams p = center;
        p.t_hold = axis[i];
        return SweepRow{axis[i], evaluate_gate(problem, p, problem.ground())};
    });
}

// ---------------------------------------------------------------------------
// Scenario: optimize

inline ScenarioResult run_optimize(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto dev = gate_device(cfg);
    const auto problem = dev.problem(cfg.run.dt);
    const auto opt = optimize_gate(problem, cfg, dev.params);
    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "optimize";
    r.summary["coupler_idle"] = dev.pulse.coupler_idle;
    r.summary["optimization"] = optimization_json(opt);
    r.summary["report"] = evaluation_json(opt.evaluation);
    if (cfg.run.half_dt_check) {
        r.summary["half_dt_check"] = half_dt_json(half_dt_check(problem, opt.evaluation, problem.ground()));
    }
    out.write_csv("optimize_trace.csv", trace_csv(opt.run));
    out.write_json("optimize.json", r.summary);
    r.exit_code = opt.run.converged ? kExitOk : kExitUnconverged;
    return r;
}

// ---------------------------------------------------------------------------
// Scenario: cz-demo (optimize, then sweep the hold time around the optimum)

inline ScenarioResult run_cz_demo(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto dev = gate_device(cfg);
    const auto problem = dev.problem(cfg.run.dt);
    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "cz-demo";
    r.summary["coupler_idle"] = dev.pulse.coupler_idle;
    r.summary["mode_params"] = to_json(dev.params);

    gateval::GateParams best;
    bool converged = true;
    if (cfg.scenario.zero_amplitude) {
        // Identity-process control: both pulses stay at their idle frequencies.
        const double hold = cfg.scenario.params ? cfg.scenario.params->t_hold : cfg.pulse.t_hold.lo;
        best = {hold, dev.pulse.coupler_idle, dev.pulse.qubit_idle};
        r.summary["zero_amplitude"] = true;
    } else if (cfg.scenario.params) {
        best = {cfg.scenario.params->t_hold, cfg.scenario.params->coupler_on, cfg.scenario.params->qubit_on};
    } else {
        const auto opt = optimize_gate(problem, cfg, dev.params);
        best = opt.best;
        converged = opt.run.converged;
        r.summary["optimization"] = optimization_json(opt);
        out.write_csv("cz_demo_trace.csv", trace_csv(opt.run));
    }

    dynamics::EvolveOptions opts;
    opts.record_every = cfg.run.series_every;
    const auto comp = dev.layout.computational(problem.ground());
    opts.record_labels = {comp[gateval::k11], comp[gateval::k01], {2, 0, 0}, {0, 2, 0}, {1, 0, 0}, {0, 1, 0}};
    dynamics::TimeSeries series;
    const auto eval = evaluate_gate(problem, best, problem.ground(), opts, cfg.run.series_every ? &series : nullptr);
    r.summary["report"] = evaluation_json(eval);
    if (cfg.run.half_dt_check && !cfg.scenario.zero_amplitude) {
        r.summary["half_dt_check"] = half_dt_json(half_dt_check(problem, eval, problem.ground()));
    }
    if (cfg.run.series_every) {
        std::ostringstream os;
        series.write_csv(os);
        out.write_csv("cz_demo_series.csv", os.str());
    }
    if (!cfg.scenario.zero_amplitude) {
        const auto rows = sweep_hold(problem, cfg, best);
        out.write_csv("cz_demo_sweep.csv", sweep_csv("t_hold", rows));
    }
    out.write_json("cz_demo.json", r.summary);
    r.exit_code = converged ? kExitOk : kExitUnconverged;
    return r;
}

// ---------------------------------------------------------------------------
// Scenario: sweep-hold

inline ScenarioResult run_sweep_hold(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto dev = gate_device(cfg);
    const auto problem = dev.problem(cfg.run.dt);
    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "sweep-hold";
    gateval::GateParams center;
    bool converged = true;
    if (cfg.scenario.params) {
        center = {cfg.scenario.params->t_hold, cfg.scenario.params->coupler_on, cfg.scenario.params->qubit_on};
    } else {
        const auto opt = optimize_gate(problem, cfg, dev.params);
        center = opt.best;
        converged = opt.run.converged;
        r.summary["optimization"] = optimization_json(opt);
    }
    const auto rows = sweep_hold(problem, cfg, center);
    json points = json::array();
    for (const auto& row : rows) {
        json p = report_json(row.eval.report);
        p.erase("u_comp");
        p.erase("u_corrected");
        p["t_hold"] = row.axis;
        p["t_gate"] = row.eval.t_gate;
        points.push_back(p);
    }
    r.summary["center"] = params_json(center);
    r.summary["points"] = points;
    out.write_csv("sweep_hold.csv", sweep_csv("t_hold", rows));
    out.write_json("sweep_hold.json", r.summary);
    r.exit_code = converged ? kExitOk : kExitUnconverged;
    return r;
}

// ---------------------------------------------------------------------------
// Scenario: sweep-delta (anharmonicity offset on alpha_2)

struct DeltaPoint {
    double delta = 0.0;
    GateOptimization opt;
};

inline ExperimentConfig with_delta(const ExperimentConfig& cfg, double delta) {
    ExperimentConfig c = cfg;
    auto m = cfg.device.resolved();
    m.alpha_2 -= delta;
    c.device.mode_params = m;
    c.device.circuit_params.reset();
    return c;
}

inline ScenarioResult run_sweep_delta(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto& deltas = cfg.scenario.deltas;
    // Points run one after another; each optimization parallelizes its own scan.
    std::vector<DeltaPoint> points;
    for (double d : deltas) {
        const auto c = with_delta(cfg, d);
        const auto dev = gate_device(c);
        points.push_back({d, optimize_gate(dev.problem(c.run.dt), c, dev.params)});
    }

    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "sweep-delta";
    json rows = json::array();
    std::ostringstream csv;
    csv << "delta,t_hold,t_gate,omega_c_on,omega_q_on,eps_leak,eps_swap,theta,fidelity,cost,gate_error,converged\n"
        << std::setprecision(15);
    bool all_converged = true;
    for (const auto& p : points) {
        const auto& e = p.opt.evaluation;
        json row = evaluation_json(e);
        row["delta"] = p.delta;
        row["optimization"] = optimization_json(p.opt);
        rows.push_back(row);
        csv << p.delta << ',' << e.params.t_hold << ',' << e.t_gate << ',' << e.params.coupler_on << ','
            << e.params.qubit_on << ',' << e.report.eps_leak << ',' << e.report.eps_swap << ',' << e.report.theta
            << ',' << e.report.fidelity << ',' << e.report.cost << ',' << e.report.gate_error() << ','
            << (p.opt.run.converged ? 1 : 0) << '\n';
        all_converged = all_converged && p.opt.run.converged;
    }
    // Gate duration should grow with the offset.
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(points[a].delta) < std::abs(points[b].delta); });
    bool monotone = true;
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (!(points[order[i]].opt.evaluation.t_gate > points[order[i - 1]].opt.evaluation.t_gate)) {
            monotone = false;
        }
    }
    if (!monotone) {
        warn("optimized gate duration does not increase monotonically with the anharmonicity offset");
    }
    r.summary["points"] = rows;
    r.summary["duration_monotone"] = monotone;
    out.write_csv("sweep_delta.csv", csv.str());
    out.write_json("sweep_delta.json", r.summary);
    r.exit_code = all_converged ? kExitOk : kExitUnconverged;
    return r;
}

// ---------------------------------------------------------------------------
// Scenario: spectator

struct SpectatorCase {
    std::string state;
    GateEvaluation eval;
};

inline std::vector<SpectatorCase> run_spectator_cases(const ExperimentConfig& cfg, const LatticeDevice& lat,
                                                      const gateval::GateParams& p, double dt) {
    const gateval::CzGateProblem problem(lat.system, lat.layout, lat.pulse, dt);
    const auto& states = cfg.scenario.spectator_states;
    return parallel_map<SpectatorCase>(states.size(), parallel_width(cfg.run.threads), [&](std::size_t i) {
        return SpectatorCase{states[i], evaluate_gate(problem, p, lat.background(states[i]))};
    });
}

inline json spectator_cases_json(const std::vector<SpectatorCase>& cases) {
    json out = json::array();
    for (const auto& c : cases) {
        json j = evaluation_json(c.eval);
        j["spectator_state"] = c.state;
        out.push_back(j);
    }
    return out;
}

inline ScenarioResult run_spectator(const ExperimentConfig& cfg, const ResultWriter& out) {
    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "spectator";

    // Two tunings. The isolated pair (lattice truncation, no spectators) gives the
    // reference error and drives the decoupled control. The lattice itself, with
    // both spectators in 0, gives the gate that is tested: the extra couplers
    // shift Q1 and Q2 by several MHz, which detunes a gate tuned in isolation.
    const auto ref = lattice_reference(cfg);
    const auto ref_problem = ref.problem(cfg.run.dt);
    const auto cal = lattice_calibration(cfg, ref.pulse.coupler_idle);
    const gateval::CzGateProblem cal_problem(cal.system, cal.layout, cal.pulse, cfg.run.dt);
    gateval::GateParams p_iso;
    gateval::GateParams p;
    bool converged = true;
    if (cfg.scenario.params) {
        p = {cfg.scenario.params->t_hold, cfg.scenario.params->coupler_on, cfg.scenario.params->qubit_on};
        p_iso = p;
    } else {
        const auto iso_opt = optimize_gate(ref_problem, cfg, ref.params);
        p_iso = iso_opt.best;
        r.summary["isolated_optimization"] = optimization_json(iso_opt);
        const auto cal_opt = optimize_gate(cal_problem, cfg, ref.params);
        p = cal_opt.best;
        r.summary["optimization"] = optimization_json(cal_opt);
        converged = iso_opt.run.converged && cal_opt.run.converged;
    }
    r.summary["calibration_dimension"] = cal.system->dimension();
    const auto isolated = evaluate_gate(ref_problem, p_iso, ref_problem.ground());
    r.summary["isolated"] = evaluation_json(isolated);

    const auto lat = lattice_device(cfg, ref.pulse.coupler_idle);
    r.summary["coupler_idle"] = lat.coupler_idle;
    r.summary["dimension"] = lat.system->dimension();
    const auto cases = run_spectator_cases(cfg, lat, p, cfg.run.dt);
    r.summary["cases"] = spectator_cases_json(cases);

    // Spectators fully decoupled: must reproduce the isolated pair.
    const auto control = lattice_device(cfg, ref.pulse.coupler_idle, 0.0);
    const auto control_cases = run_spectator_cases(cfg, control, p_iso, cfg.run.dt);
    r.summary["decoupled_control"] = spectator_cases_json(control_cases);

    // Basis-cutoff convergence: repeat with one more allowed excitation.
    ExperimentConfig bigger = cfg;
    bigger.device.lattice.excitation_cutoff += 1;
    const auto lat_big = lattice_device(bigger, ref.pulse.coupler_idle);
    const auto big_cases = run_spectator_cases(bigger, lat_big, p, cfg.run.dt);
    json cutoff = json::array();
    bool cutoff_ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const double a = cases[i].eval.report.gate_error();
        const double b = big_cases[i].eval.report.gate_error();
        const double change = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
        const bool ok = change <= kCutoffTolerance;
        if (!ok) {
            std::ostringstream os;
            os << "spectator " << cases[i].state << ": gate error " << a << " at cutoff "
               << cfg.device.lattice.excitation_cutoff << " vs " << b << " at cutoff "
               << bigger.device.lattice.excitation_cutoff;
            warn(os.str());
        }
        cutoff_ok = cutoff_ok && ok;
        cutoff.push_back({{"spectator_state", cases[i].state},
                          {"gate_error", a},
                          {"gate_error_cutoff_plus_one", b},
                          {"relative_change", change}});
    }
    r.summary["cutoff_check"] = {{"cutoff", cfg.device.lattice.excitation_cutoff},
                                 {"dimension_plus_one", lat_big.system->dimension()},
                                 {"passed", cutoff_ok},
                                 {"cases", cutoff}};

    std::ostringstream csv;
    csv << "spectator_state,gate_error,infidelity,eps_leak,eps_swap,theta,control_gate_error,"
           "gate_error_cutoff_plus_one\n"
        << std::setprecision(15);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& g = cases[i].eval.report;
        csv << cases[i].state << ',' << g.gate_error() << ',' << g.infidelity() << ',' << g.eps_leak << ','
            << g.eps_swap << ',' << g.theta << ',' << control_cases[i].eval.report.gate_error() << ','
            << big_cases[i].eval.report.gate_error() << '\n';
    }
    out.write_csv("spectator.csv", csv.str());
    out.write_json("spectator.json", r.summary);
    r.exit_code = converged ? kExitOk : kExitUnconverged;
    return r;
}

// ---------------------------------------------------------------------------
// Scenario: spectrum

inline json spectrum_json(const model::DressedSpectrum& s) {
    json rows = json::array();
    const double e0 = s.size() ? s[0].energy : 0.0;
    for (const auto& d : s.states()) {
        rows.push_back({{"energy", (d.energy - e0) / model::kTwoPi},
                        {"label", model::to_string(d.label.bare)},
                        {"overlap", d.label.overlap},
                        {"hybridized", d.label.hybridized}});
    }
    return rows;
}

inline ScenarioResult run_spectrum(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto dev = gate_device(cfg);
    const auto m = dev.params;
    const double work = cfg.scenario.work_point.value_or(m.omega_2 - m.alpha_1);

    auto freqs = dev.system->idle_frequencies();
    const auto idle = model::dressed_spectrum(dev.system->hamiltonian(freqs));
    freqs[dev.layout.tuned_qubit] = work;
    const auto at_work = model::dressed_spectrum(dev.system->hamiltonian(freqs));

    // Bare two-excitation energies at the work point (GHz).
    const double e110 = work + m.omega_2;
    const double e200 = 2.0 * work + m.alpha_1;
    const double e020 = 2.0 * m.omega_2 + m.alpha_2;

    ScenarioResult r;
    r.summary = provenance_json(cfg, out.hash());
    r.summary["scenario"] = "spectrum";
    r.summary["coupler_idle"] = dev.pulse.coupler_idle;
    r.summary["work_point"] = work;
    r.summary["bare_detunings"] = {{"E110_minus_E200", e110 - e200}, {"E110_minus_E020", e110 - e020}};
    r.summary["idle"] = spectrum_json(idle);
    r.summary["work"] = spectrum_json(at_work);

    std::ostringstream csv;
    csv << "point,index,energy,label,overlap,hybridized\n" << std::setprecision(15);
    for (const auto& [name, spec] : {std::pair{"idle", &idle}, std::pair{"work", &at_work}}) {
        const double e0 = spec->size() ? (*spec)[0].energy : 0.0;
        for (std::size_t i = 0; i < spec->size(); ++i) {
            const auto& d = (*spec)[i];
            csv << name << ',' << i << ',' << (d.energy - e0) / model::kTwoPi << ",|" << model::to_string(d.label.bare)
                << ">," << d.label.overlap << ',' << (d.label.hybridized ? 1 : 0) << '\n';
        }
    }
    out.write_csv("spectrum.csv", csv.str());
    out.write_json("spectrum.json", r.summary);
    return r;
}

inline ScenarioResult run_scenario(const ExperimentConfig& cfg, const ResultWriter& out) {
    const auto& name = cfg.scenario.name;
    if (name == "cz-demo") {
        return run_cz_demo(cfg, out);
    }
    if (name == "sweep-hold") {
        return run_sweep_hold(cfg, out);
    }
    if (name == "sweep-delta") {
        return run_sweep_delta(cfg, out);
    }
    if (name == "spectator") {
        return run_spectator(cfg, out);
    }
    if (name == "optimize") {
        return run_optimize(cfg, out);
    }
    if (name == "spectrum") {
        return run_spectrum(cfg, out);
    }
    throw ConfigError("unknown scenario '" + name + "'");
}

}  // namespace czforge::experiments
