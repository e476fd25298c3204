// czforge <scenario> --config <path> [--out <dir>] [--dt <ns>] [--force]

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "czforge/experiments/config.hpp"
#include "czforge/experiments/output.hpp"
#include "czforge/experiments/scenarios.hpp"

namespace ex = czforge::experiments;

int main(int argc, char** argv) {
    CLI::App app{"Fast CZ gate simulation: optimize, sweep and score pulsed three-mode gates"};
    app.set_version_flag("--version", std::string(CZFORGE_VERSION));

    std::string scenario;
    std::string config_path;
    std::string out_dir;
    double dt = 0.0;
    bool force = false;
    bool quiet = false;

    app.add_option("scenario", scenario, "cz-demo | sweep-hold | sweep-delta | spectator | optimize | spectrum")
        ->required()
        ->check(CLI::IsMember(ex::scenario_names()));
    app.add_option("--config,-c", config_path, "experiment config (JSON)")->required();
    app.add_option("--out,-o", out_dir, "output directory (overrides run.out)");
    app.add_option("--dt", dt, "integration step in ns (overrides run.dt)")->check(CLI::PositiveNumber);
    app.add_flag("--force", force, "overwrite outputs written by a different configuration");
    app.add_flag("--quiet,-q", quiet, "do not print the summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ex::kExitConfig;
    }

    try {
        auto cfg = ex::load_config(config_path);
        cfg.scenario.name = scenario;
        if (!out_dir.empty()) {
            cfg.run.out = out_dir;
        }
        if (dt > 0.0) {
            cfg.run.dt = dt;
        }
        const ex::ResultWriter writer(cfg.run.out, ex::config_hash(cfg), force);
        const auto result = ex::run_scenario(cfg, writer);
        if (!quiet) {
            auto brief = result.summary;
            brief.erase("config");
            std::cout << brief.dump(2) << '\n';
        }
        if (result.exit_code == ex::kExitUnconverged) {
            std::cerr << "czforge: optimization did not converge; partial results written to " << cfg.run.out << '\n';
        }
        return result.exit_code;
    } catch (const czforge::ConfigError& e) {
        std::cerr << "czforge: config error: " << e.what() << '\n';
        return ex::kExitConfig;
    } catch (const czforge::ParameterDomainError& e) {
        std::cerr << "czforge: config error: " << e.what() << '\n';
        return ex::kExitConfig;
    } catch (const czforge::InvalidPulseError& e) {
        std::cerr << "czforge: config error: " << e.what() << '\n';
        return ex::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "czforge: " << e.what() << '\n';
        return 1;
    }
}
