#include "syncobs/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App& cmd, syncobs::RunConfig& cfg) {
    cmd.add_option("--config", cfg.config, "scenario TOML file (reference scenario if omitted)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--override", cfg.overrides, "dotted key=value, repeatable")->take_all()->allow_extra_args(false);
    cmd.add_option("--seed", cfg.seed, "measurement-noise seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronous machine observability and EKF simulator"};
    app.require_subcommand(1);

    syncobs::RunConfig run_cfg;
    auto* run = app.add_subcommand("run", "simulate a scenario and write timeseries.csv and report.json");
    add_common(*run, run_cfg);
    run->add_option("--out", run_cfg.out, "output directory")->capture_default_str();

    syncobs::RunConfig obs_cfg;
    syncobs::OperatingPoint point;
    auto* obs = app.add_subcommand("observability", "observability report for one operating point (JSON)");
    add_common(*obs, obs_cfg);
    obs->add_option("--theta", point.theta, "rotor position [rad]");
    obs->add_option("--omega", point.omega, "electrical speed [rad/s]");
    obs->add_option("--id", point.i_d, "d-axis current [A]");
    obs->add_option("--iq", point.i_q, "q-axis current [A]");
    obs->add_option("--if", point.i_f, "rotor current [A]");
    obs->add_option("--did", point.di_d, "di_d/dt [A/s]");
    obs->add_option("--diq", point.di_q, "di_q/dt [A/s]");
    obs->add_option("--dif", point.di_f, "di_f/dt [A/s]");

    syncobs::SweepConfig sweep_cfg;
    sweep_cfg.run.out = "sweep";
    auto* sweep = app.add_subcommand("sweep", "run a parameter grid; one report per point plus sweep.csv");
    add_common(*sweep, sweep_cfg.run);
    sweep->add_option("--out", sweep_cfg.run.out, "output directory")->capture_default_str();
    sweep->add_option("--axis", sweep_cfg.axes, "key=v1,v2,... (repeatable; grid is the cartesian product)")
        ->required()
        ->allow_extra_args(false);
    sweep->add_option("--jobs", sweep_cfg.jobs, "concurrent runs (0 = hardware threads)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return syncobs::kExitConfigError;
    }

    if (run->parsed()) {
        return syncobs::cmd_run(run_cfg, std::cout, std::cerr);
    }
    if (obs->parsed()) {
        return syncobs::cmd_observability(obs_cfg, point, std::cout, std::cerr);
    }
    return syncobs::cmd_sweep(sweep_cfg, std::cout, std::cerr);
}
