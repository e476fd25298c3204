#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "czforge/experiments/scenarios.hpp"

using namespace czforge;
using namespace czforge::experiments;

namespace {

struct QuietWarnings {
    std::vector<std::string> seen;
    QuietWarnings() {
        set_warning_sink([this](const std::string& m) { seen.push_back(m); });
    }
    ~QuietWarnings() { set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << '\n'; }); }
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("czforge_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig quick_config() {
    auto c = default_config();
    c.run.half_dt_check = false;
    c.run.series_every = 0;
    return c;
}

}  // namespace

TEST(Config, RoundTripKeepsHash) {
    auto c = default_config();
    c.scenario.deltas = {0.0, 0.015};
    c.run.scan.coupler_step = 0.05;
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, HashTracksContent) {
    auto a = default_config();
    auto b = a;
    b.run.dt = 0.005;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16U);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    auto j = to_json(default_config());
    j["run"]["thread"] = 2;
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = to_json(default_config());
    j["run"]["scan"]["coupler_step"] = 0.0;
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = to_json(default_config());
    j["run"]["refine_seeds"] = 0;
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = to_json(default_config());
    j["pulse"]["bounds"]["t_hold"] = {10.0, 5.0};
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = to_json(default_config());
    j["device"]["lattice"]["form"] = "dispersive";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["device"]["lattice"]["form"] = "full";
    EXPECT_EQ(config_from_json(j).device.lattice.form, model::CouplingForm::Full);
}

TEST(Config, ExactlyOneDeviceDescription) {
    auto j = to_json(default_config());
    j["device"].erase("mode_params");
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    for (const char* name : {"table1.json", "circuit_fixture.json"}) {
        EXPECT_NO_THROW(load_config(std::string(CZFORGE_SOURCE_DIR) + "/configs/" + name)) << name;
    }
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(ResultWriter, RefusesForeignHashUnlessForced) {
    TempDir tmp("writer");
    ResultWriter a(tmp.path, "aaaa", false);
    a.write_json("r.json", {{"x", 1}});
    a.write_csv("r.csv", "x\n1\n");
    EXPECT_NO_THROW(a.write_json("r.json", {{"x", 2}}));
    EXPECT_EQ(ResultWriter::stored_hash(tmp.path / "r.csv"), "aaaa");

    ResultWriter b(tmp.path, "bbbb", false);
    EXPECT_THROW(b.write_json("r.json", {{"x", 3}}), OutputConflictError);
    EXPECT_THROW(b.write_csv("r.csv", "x\n3\n"), OutputConflictError);

    ResultWriter forced(tmp.path, "bbbb", true);
    EXPECT_NO_THROW(forced.write_json("r.json", {{"x", 3}}));
    EXPECT_EQ(ResultWriter::stored_hash(tmp.path / "r.json"), "bbbb");
    EXPECT_TRUE(std::filesystem::exists(tmp.path / "r.json.meta.json"));
    // Timestamps live only in the sidecar.
    EXPECT_EQ(slurp(tmp.path / "r.json").find("written_utc"), std::string::npos);
}

TEST(Parallel, ResultsFollowIndexOrder) {
    std::atomic<int> calls{0};
    const auto out = parallel_map<int>(100, 4, [&](std::size_t i) {
        ++calls;
        return static_cast<int>(i * i);
    });
    EXPECT_EQ(calls.load(), 100);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i], static_cast<int>(i * i));
    }
}

TEST(Parallel, RethrowsTaskFailure) {
    auto f = [](std::size_t i) -> int {
        if (i == 7) {
            throw std::runtime_error("boom");
        }
        return 0;
    };
    EXPECT_THROW(parallel_map<int>(20, 3, f), std::runtime_error);
    EXPECT_THROW(parallel_map<int>(20, 1, f), std::runtime_error);
}

TEST(Parallel, EnvironmentCapsWidth) {
    ::setenv("CZFORGE_THREADS", "2", 1);
    EXPECT_EQ(parallel_width(8), 2);
    EXPECT_EQ(parallel_width(1), 1);
    ::setenv("CZFORGE_THREADS", "junk", 1);
    EXPECT_EQ(parallel_width(8), 8);
    ::unsetenv("CZFORGE_THREADS");
    EXPECT_EQ(parallel_width(0), 1);
}

TEST(Decoupling, FindsSignChange) {
    EXPECT_NEAR(decoupling_point([](double x) { return 0.3 * (x - 5.731); }, {5.0, 7.0}), 5.731, 1e-10);
    // Of two roots the one with the smaller bracketing magnitude wins.
    const double x = decoupling_point([](double x) { return (x - 5.2) * (x - 6.5) * (x < 6.0 ? 1.0 : 10.0); },
                                      {5.0, 7.0});
    EXPECT_NEAR(x, 5.2, 1e-10);
}

TEST(Decoupling, FallsBackToMinimumMagnitude) {
    QuietWarnings w;
    EXPECT_NEAR(decoupling_point([](double x) { return 1e-3 + (x - 6.1) * (x - 6.1); }, {5.0, 7.0}), 6.1, 1e-6);
    EXPECT_EQ(w.seen.size(), 1U);
}

TEST(Decoupling, GateCouplerIdleZeroesBrightCoupling) {
    const auto cfg = default_config();
    const auto t = gate_triplet(cfg);
    const double idle = resolve_coupler_idle(cfg, t);
    EXPECT_GT(idle, 5.0);
    EXPECT_LT(idle, 7.0);
    EXPECT_LT(std::abs(idle_bright_coupling(t, idle)), 1e-9);
    // Well away from it the coupling is MHz-scale.
    EXPECT_GT(std::abs(idle_bright_coupling(t, 5.0)), 1e-3);
}

TEST(Seeding, LocalMinimaOfGrid) {
    // 3 x 4 grid with minima at (0, 0) and (2, 2).
    const std::vector<double> cost{0.1, 0.5, 0.6, 0.7,  //
                                   0.4, 0.5, 0.3, 0.6,  //
                                   0.9, 0.8, 0.02, 0.5};
    const auto m = local_minima(cost, 3, 4);
    ASSERT_EQ(m.size(), 2U);
    EXPECT_EQ(m[0], 10U);
    EXPECT_EQ(m[1], 0U);
}

TEST(Seeding, NonFiniteCellsAreSkipped) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto m = local_minima({inf, inf, 0.2, inf}, 2, 2);
    ASSERT_EQ(m.size(), 1U);
    EXPECT_EQ(m[0], 2U);
}

TEST(Seeding, QubitWindowIsClamped) {
    auto cfg = default_config();
    const auto m = cfg.device.resolved();
    auto q = qubit_axis(cfg, m);
    ASSERT_FALSE(q.empty());
    EXPECT_NEAR(q.front(), 4.42, 1e-12);
    EXPECT_NEAR(q.back(), 4.52, 1e-9);
    cfg.pulse.qubit_on = {4.45, 4.50};
    q = qubit_axis(cfg, m);
    EXPECT_NEAR(q.front(), 4.45, 1e-12);
    EXPECT_LE(q.back(), 4.50 + 1e-12);
}

TEST(Seeding, ShortestAcceptableCandidateWins) {
    auto cand = [](double hold, double cost) {
        Candidate c;
        c.run.best_p = {hold, 5.0, 4.5};
        c.run.best_cost = cost;
        return c;
    };
    EXPECT_EQ(choose_candidate({cand(40, 1e-9), cand(16, 5e-7), cand(10, 1e-3)}, 1e-6), 1U);
    // Nothing acceptable: lowest cost.
    EXPECT_EQ(choose_candidate({cand(40, 1e-4), cand(16, 5e-5), cand(10, 1e-3)}, 1e-6), 1U);
}

TEST(Spectrum, WorkPointDetuningsVanish) {
    TempDir tmp("spectrum");
    const auto cfg = quick_config();
    const auto r = run_spectrum(cfg, ResultWriter(tmp.path, config_hash(cfg), false));
    EXPECT_NEAR(r.summary["bare_detunings"]["E110_minus_E200"].get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(r.summary["bare_detunings"]["E110_minus_E020"].get<double>(), 0.0, 1e-12);
    EXPECT_TRUE(std::filesystem::exists(tmp.path / "spectrum.csv"));
}

TEST(Spectrum, AnharmonicityOffsetDetunesTheIstLevel) {
    TempDir tmp("spectrum_delta");
    const auto cfg = with_delta(quick_config(), 0.010);
    const auto r = run_spectrum(cfg, ResultWriter(tmp.path, config_hash(cfg), false));
    EXPECT_NEAR(r.summary["bare_detunings"]["E110_minus_E020"].get<double>(), 0.010, 1e-12);
    EXPECT_NEAR(r.summary["bare_detunings"]["E110_minus_E200"].get<double>(), 0.0, 1e-12);
}

TEST(Spectrum, UncoupledDressedEqualsBare) {
    TempDir tmp("spectrum_bare");
    auto cfg = quick_config();
    auto m = *cfg.device.mode_params;
    m.g_12 = m.g_1c = m.g_2c = 0.0;
    cfg.device.mode_params = m;
    cfg.pulse.coupler_idle = 5.5;
    const auto r = run_spectrum(cfg, ResultWriter(tmp.path, config_hash(cfg), false));
    for (const auto& s : r.summary["idle"]) {
        EXPECT_NEAR(s["overlap"].get<double>(), 1.0, 1e-12);
    }
    // |100> sits at the qubit idle frequency above the ground state.
    bool found = false;
    for (const auto& s : r.summary["idle"]) {
        if (s["label"] == "100") {
            EXPECT_NEAR(s["energy"].get<double>(), 4.60, 1e-9);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(Scenarios, OutputsAreReproducible) {
    TempDir a("repro_a");
    TempDir b("repro_b");
    const auto cfg = quick_config();
    run_spectrum(cfg, ResultWriter(a.path, config_hash(cfg), false));
    run_spectrum(cfg, ResultWriter(b.path, config_hash(cfg), false));
    EXPECT_EQ(slurp(a.path / "spectrum.json"), slurp(b.path / "spectrum.json"));
    EXPECT_EQ(slurp(a.path / "spectrum.csv"), slurp(b.path / "spectrum.csv"));
}

TEST(Scenarios, ZeroAmplitudeIsTheIdentityProcess) {
    TempDir tmp("zero");
    auto cfg = quick_config();
    cfg.scenario.zero_amplitude = true;
    cfg.scenario.params = GateParamsConfig{16.0, 0.0, 0.0};
    cfg.run.dt = 0.02;
    const auto r = run_cz_demo(cfg, ResultWriter(tmp.path, config_hash(cfg), false));
    EXPECT_EQ(r.exit_code, kExitOk);
    const auto& rep = r.summary["report"];
    EXPECT_NEAR(rep["theta"].get<double>(), 0.0, 1e-3);
    EXPECT_NEAR(rep["fidelity"].get<double>(), 0.4, 1e-3);
    EXPECT_LT(rep["unitarity_defect"].get<double>(), 1e-9);
}

TEST(Scenarios, FixedParamsSweepHold) {
    TempDir tmp("sweep_hold");
    auto cfg = quick_config();
    cfg.scenario.params = GateParamsConfig{16.0, 4.75, 4.48};
    cfg.scenario.hold_points = 3;
    cfg.scenario.hold_span = 1.0;
    cfg.run.dt = 0.02;
    const auto r = run_sweep_hold(cfg, ResultWriter(tmp.path, config_hash(cfg), false));
    ASSERT_EQ(r.summary["points"].size(), 3U);
    EXPECT_NEAR(r.summary["points"][0]["t_hold"].get<double>(), 15.0, 1e-12);
    EXPECT_NEAR(r.summary["points"][2]["t_hold"].get<double>(), 17.0, 1e-12);
    for (const auto& p : r.summary["points"]) {
        EXPECT_GE(p["fidelity"].get<double>(), 0.0);
        EXPECT_LE(p["fidelity"].get<double>(), 1.0);
    }
    const auto csv = slurp(tmp.path / "sweep_hold.csv");
    EXPECT_EQ(csv.rfind("# config_hash=", 0), 0U);
    EXPECT_NE(csv.find("t_hold,t_gate,eps_leak,eps_swap,theta,fidelity,cost"), std::string::npos);
}

TEST(Spectator, DecoupledSpectatorsDoNotMatter) {
    // Without spectator couplings and without counter-rotating terms the gate
    // pair never feels the excitation cutoff, whatever the spectators hold.
    const auto cfg = quick_config();
    ASSERT_EQ(cfg.device.lattice.form, model::CouplingForm::Rwa);
    const auto ref = lattice_reference(cfg);
    const auto lat = lattice_device(cfg, ref.pulse.coupler_idle, 0.0);
    const auto cases = run_spectator_cases(cfg, lat, {16.0, 4.75, 4.48}, 0.02);
    ASSERT_EQ(cases.size(), 4U);
    for (const auto& c : cases) {
        EXPECT_NEAR(c.eval.report.gate_error(), cases[0].eval.report.gate_error(), 1e-9) << c.state;
        EXPECT_NEAR(c.eval.report.theta, cases[0].eval.report.theta, 1e-9) << c.state;
    }
    // And they agree with the reduced two-qubit reference.
    const auto iso = evaluate_gate(ref.problem(0.02), {16.0, 4.75, 4.48}, ref.problem(0.02).ground());
    EXPECT_NEAR(cases[0].eval.report.gate_error(), iso.report.gate_error(), 1e-9);
}

TEST(Spectator, CalibrationLatticeIsExactForGroundSpectators) {
    const auto cfg = quick_config();
    const auto ref = lattice_reference(cfg);
    const auto lat = lattice_device(cfg, ref.pulse.coupler_idle);
    const auto cal = lattice_calibration(cfg, ref.pulse.coupler_idle);
    EXPECT_LT(cal.system->dimension(), lat.system->dimension());
    EXPECT_EQ(cal.coupler_idle, lat.coupler_idle);
    const gateval::GateParams p{16.0, 4.75, 4.48};
    const gateval::CzGateProblem a(lat.system, lat.layout, lat.pulse, 0.02);
    const gateval::CzGateProblem b(cal.system, cal.layout, cal.pulse, 0.02);
    const auto ua = a.symmetric_block(p, a.ground());
    const auto ub = b.symmetric_block(p, b.ground());
    EXPECT_LT((ua.cwiseAbs() - ub.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(gateval::conditional_phase(ua), gateval::conditional_phase(ub), 1e-9);
}

TEST(Spectator, BackgroundEncodesSpectatorBits) {
    const auto cfg = quick_config();
    const auto lat = lattice_device(cfg, 5.55, 0.0);
    const auto o = lat.background("01");
    EXPECT_EQ(o[kS1], 0);
    EXPECT_EQ(o[kS2], 1);
    EXPECT_EQ(o[kQ1], 0);
}

TEST(Spectrum, CouplerTermOpposesDirectCouplingAtTheWorkPoint) {
    // Near the work point the coupler-mediated 110 <-> B term has the opposite
    // sign to g_12, so a larger g_12 weakens the gate coupling there. With the
    // coupler paths off it is exactly 2 g_12.
    auto bright = [](double g12, double gc) {
        auto cfg = quick_config();
        cfg.device.mode_params->g_12 = g12;
        cfg.device.mode_params->g_1c = gc;
        cfg.device.mode_params->g_2c = gc;
        auto t = gate_triplet(cfg);
        t.q1.omega = 4.483;
        return idle_bright_coupling(t, 4.738);
    };
    EXPECT_LT(std::abs(bright(0.020, 0.100)), std::abs(bright(0.010, 0.100)));
    EXPECT_NEAR(std::abs(bright(0.010, 0.0)), 0.020, 1e-4);
    EXPECT_NEAR(std::abs(bright(0.020, 0.0)), 0.040, 2e-4);
}
