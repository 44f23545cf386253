#include "syncobs/commands.hpp"

#include "syncobs/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace syncobs {

namespace fs = std::filesystem;

ConfigTable load_config_table(const RunConfig& cfg) {
    ConfigTable table = cfg.config ? load_toml_file(*cfg.config) : ConfigTable{};
    for (const auto& assignment : cfg.overrides) {
        auto [key, value] = parse_override(assignment);
        table.insert_or_assign(std::move(key), std::move(value));
    }
    if (cfg.seed) {
        if (*cfg.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw ConfigError("seed is out of range");
        }
        table.insert_or_assign("noise.seed", ConfigValue{static_cast<std::int64_t>(*cfg.seed)});
    }
    return table;
}

LoadedScenario load_scenario(const ConfigTable& table) {
    LoadedScenario out;
    out.scenario = scenario_from_table(table);
    out.position_tolerance = report_tolerance_from_table(table);
    return out;
}

namespace {

struct RunOutcome {
    int code = kExitOk;
    std::string message;
    std::optional<RunSummary> summary;
};

RunOutcome run_to_directory(const LoadedScenario& loaded, const fs::path& dir) {
    RunOutcome outcome;
    fs::create_directories(dir);
    try {
        const TimeSeriesLog log = run_scenario(loaded.scenario);
        std::ostringstream csv;
        write_csv(csv, log);
        write_text_file(dir / "timeseries.csv", csv.str());
        outcome.summary = summarize_run(loaded.scenario, log, loaded.position_tolerance);
        std::ostringstream json;
        write_json(json, to_json(*outcome.summary));
        write_text_file(dir / "report.json", json.str());
    } catch (const SimulationDiverged& e) {
        std::ostringstream json;
        write_json(json, diverged_report_json(loaded.scenario, e.time(), e.what()));
        write_text_file(dir / "report.json", json.str());
        outcome.code = kExitDiverged;
        outcome.message = e.what();
    }
    return outcome;
}

std::string csv_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

} // namespace

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    LoadedScenario loaded;
    try {
        loaded = load_scenario(load_config_table(cfg));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }
    try {
        const RunOutcome outcome = run_to_directory(loaded, cfg.out);
        if (outcome.code != kExitOk) {
            err << outcome.message << '\n';
            return outcome.code;
        }
    } catch (const fs::filesystem_error& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::runtime_error& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfigError;
    }
    out << "wrote " << (cfg.out / "timeseries.csv").string() << " and " << (cfg.out / "report.json").string()
        << '\n';
    return kExitOk;
}

int cmd_observability(const RunConfig& cfg, const OperatingPoint& p, std::ostream& out, std::ostream& err) {
    Scenario s;
    try {
        s = load_scenario(load_config_table(cfg)).scenario;
        for (double v : {p.theta, p.omega, p.i_d, p.i_q, p.i_f, p.di_d, p.di_q, p.di_f}) {
            if (!std::isfinite(v)) {
                throw ConfigError("operating point values must be finite");
            }
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }
    const auto sample =
        ObservabilitySample::from_dq(p.theta, p.omega, p.i_d, p.i_q, p.i_f, p.di_d, p.di_q, p.di_f);
    const ObservabilityReport report = evaluate_observability(s.params, sample, s.thresholds);
    write_json(out, to_json(s.params, sample, report));
    return kExitOk;
}

SweepAxis parse_sweep_axis(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("sweep axis '" + std::string(spec) + "' must have the form key=v1,v2,...");
    }
    SweepAxis axis;
    axis.key = std::string(spec.substr(0, eq));
    if (!is_known_config_key(axis.key)) {
        throw ConfigError("unknown config key '" + axis.key + "'");
    }
    if (!is_scalar_numeric_key(axis.key)) {
        throw ConfigError("config key '" + axis.key + "' is not a numeric scalar and cannot be swept");
    }
    std::string_view rest = spec.substr(eq + 1);
    while (true) {
        const auto comma = rest.find(',');
        const ConfigValue v = parse_override_value(rest.substr(0, comma));
        if (!v.is_number()) {
            throw ConfigError("sweep values for '" + axis.key + "' must be numbers");
        }
        axis.values.push_back(v.as_double(axis.key));
        if (comma == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(comma + 1);
    }
    return axis;
}

int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& err) {
    ConfigTable base;
    std::vector<SweepAxis> axes;
    try {
        base = load_config_table(cfg.run);
        if (cfg.axes.empty()) {
            throw ConfigError("sweep needs at least one --axis");
        }
        for (const auto& spec : cfg.axes) {
            axes.push_back(parse_sweep_axis(spec));
        }
        load_scenario(base);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }

    std::vector<std::vector<double>> grid{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : grid) {
            for (double v : axis.values) {
                auto point = prefix;
                point.push_back(v);
                next.push_back(std::move(point));
            }
        }
        grid = std::move(next);
    }

    struct PointResult {
        std::string status;
        std::string message;
        std::optional<RunSummary> summary;
    };
    std::vector<PointResult> results(grid.size());
    auto point_dir = [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%03zu", i);
        return cfg.run.out / name;
    };
    auto run_point = [&](std::size_t i) {
        PointResult& r = results[i];
        try {
            ConfigTable table = base;
            for (std::size_t a = 0; a < axes.size(); ++a) {
                table.insert_or_assign(axes[a].key, ConfigValue{grid[i][a]});
            }
            const RunOutcome outcome = run_to_directory(load_scenario(table), point_dir(i));
            r.status = outcome.code == kExitOk ? "ok" : "diverged";
            r.message = outcome.message;
            r.summary = outcome.summary;
        } catch (const ConfigError& e) {
            r.status = "config_error";
            r.message = e.what();
        } catch (const std::exception& e) {
            r.status = "error";
            r.message = e.what();
        }
    };

    try {
        fs::create_directories(cfg.run.out);
    } catch (const fs::filesystem_error& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfigError;
    }

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned jobs = std::min<std::size_t>(cfg.jobs == 0 ? hw : cfg.jobs, grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            run_point(i);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::ostringstream csv;
    csv << "point";
    for (const auto& axis : axes) {
        csv << ',' << axis.key;
    }
    csv << ",status,standstill_converged,standstill_converged_at,converged_at,final_position_error,"
           "max_speed_error,max_abs_delta_y\n";
    bool failed = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const PointResult& r = results[i];
        csv << i;
        for (double v : grid[i]) {
            csv << ',' << format_double(v);
        }
        csv << ',' << r.status;
        if (r.summary) {
            const SegmentSummary* hold = find_segment(*r.summary, "initial_hold");
            const SegmentSummary* last = r.summary->segments.empty() ? nullptr : &r.summary->segments.back();
            csv << ',' << (hold && hold->position_converged ? "true" : "false") << ','
                << (hold ? csv_field(hold->converged_at) : "") << ',' << csv_field(r.summary->converged_at) << ','
                << (last ? format_double(last->final_position_error) : "") << ','
                << format_double(r.summary->max_speed_error) << ',' << format_double(r.summary->max_abs_delta_y);
        } else {
            csv << ",,,,,,";
        }
        csv << '\n';
        if (r.status != "ok") {
            failed = true;
            err << point_dir(i).filename().string() << ": " << r.status << ": " << r.message << '\n';
        }
    }
    write_text_file(cfg.run.out / "sweep.csv", csv.str());
    out << "wrote " << grid.size() << " points to " << (cfg.run.out / "sweep.csv").string() << '\n';
    return failed ? kExitDiverged : kExitOk;
}

} // namespace syncobs
