#pragma once

#include "syncobs/config.hpp"
#include "syncobs/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace syncobs {

enum ExitCode : int { kExitOk = 0, kExitConfigError = 1, kExitDiverged = 2 };

struct RunConfig {
    std::optional<std::filesystem::path> config; // reference scenario when absent
    std::filesystem::path out = "out";
    std::vector<std::string> overrides;          // "key=value"
    std::optional<std::uint64_t> seed;
};

/// Config file, then overrides in order, then --seed.
ConfigTable load_config_table(const RunConfig& cfg);

struct LoadedScenario {
    Scenario scenario;
    double position_tolerance = 0.05;
};

LoadedScenario load_scenario(const ConfigTable& table);

/// Writes <out>/timeseries.csv and <out>/report.json.
int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct OperatingPoint {
    double theta = 0.0;
    double omega = 0.0;
    double i_d = 0.0;
    double i_q = 0.0;
    double i_f = 0.0;
    double di_d = 0.0;
    double di_q = 0.0;
    double di_f = 0.0;
};

/// Prints the observability report for one point as JSON on `out`.
int cmd_observability(const RunConfig& cfg, const OperatingPoint& point, std::ostream& out, std::ostream& err);

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

/// "hf.amplitude=0,0.25,0.5"
SweepAxis parse_sweep_axis(std::string_view spec);

struct SweepConfig {
    RunConfig run;
    std::vector<std::string> axes;
    unsigned jobs = 0; // 0: hardware concurrency
};

/// Cartesian grid over the axes. Each point gets <out>/point_NNN with the
/// same files as cmd_run; <out>/sweep.csv aggregates. Failed points are
/// recorded and the sweep continues; the exit code is 2 if any failed.
int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace syncobs
