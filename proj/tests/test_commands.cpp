#include "syncobs/commands.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace syncobs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("syncobs_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig short_run(const fs::path& out, double duration) {
    RunConfig cfg;
    cfg.config = SYNCOBS_SCENARIO_DIR "/paper_fig5.toml";
    cfg.out = out;
    cfg.overrides = {"simulation.duration=" + std::to_string(duration)};
    return cfg;
}

} // namespace

TEST_CASE("run writes the time series and the report") {
    const fs::path dir = scratch("run");
    std::ostringstream out, err;
    REQUIRE(cmd_run(short_run(dir, 0.05), out, err) == kExitOk);
    const std::string csv = slurp(dir / "timeseries.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1001);
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["status"] == "ok");
    CHECK(report["schema_version"] == 1);
    CHECK(report["samples"] == 1000);
    CHECK(report["segments"][0]["name"] == "initial_hold");
}

TEST_CASE("identical runs give byte-identical files") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream out, err;
    RunConfig ca = short_run(a, 0.1), cb = short_run(b, 0.1);
    ca.overrides.push_back("noise.std_alpha=0.1");
    cb.overrides.push_back("noise.std_alpha=0.1");
    ca.seed = cb.seed = 77;
    REQUIRE(cmd_run(ca, out, err) == kExitOk);
    REQUIRE(cmd_run(cb, out, err) == kExitOk);
    CHECK(slurp(a / "timeseries.csv") == slurp(b / "timeseries.csv"));
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
}

TEST_CASE("run exit codes") {
    std::ostringstream out, err;
    RunConfig bad = short_run(scratch("bad"), 0.01);
    bad.overrides.push_back("foo=1");
    CHECK(cmd_run(bad, out, err) == kExitConfigError);
    CHECK(err.str().find("'foo'") != std::string::npos);

    RunConfig missing;
    missing.config = "/nonexistent.toml";
    CHECK(cmd_run(missing, out, err) == kExitConfigError);

    const fs::path dir = scratch("diverge");
    RunConfig diverge = short_run(dir, 0.2);
    diverge.overrides.push_back("simulation.current_limit=5");
    std::ostringstream err2;
    CHECK(cmd_run(diverge, out, err2) == kExitDiverged);
    CHECK(err2.str().find("diverged") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["status"] == "diverged");
    CHECK(report["diverged_at"].get<double>() > 0.0);
}

TEST_CASE("observability command") {
    std::ostringstream out, err;
    OperatingPoint still{0.3, 0.0, 4, 15, 4, 0, 0, 0};
    REQUIRE(cmd_observability({}, still, out, err) == kExitOk);
    auto j = nlohmann::json::parse(out.str());
    CHECK(j["delta_y"] == 0.0);
    CHECK(j["observable"] == false);

    out.str("");
    OperatingPoint moving{0.3, 500.0, 4, 15, 4, 0, 0, 0};
    REQUIRE(cmd_observability({}, moving, out, err) == kExitOk);
    j = nlohmann::json::parse(out.str());
    CHECK(j["observable"] == true);
    CHECK(j["numeric_rank"] == 2);

    out.str("");
    RunConfig syrm;
    syrm.overrides = {"machine.kind=syrm"};
    OperatingPoint equal{0.0, 100.0, 10, 10, 0, 0, 0, 0};
    REQUIRE(cmd_observability(syrm, equal, out, err) == kExitOk);
    j = nlohmann::json::parse(out.str());
    CHECK(j["theta_o"].get<double>() == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));

    RunConfig bad;
    bad.overrides = {"machine.Ld=oops"};
    CHECK(cmd_observability(bad, still, out, err) == kExitConfigError);
    OperatingPoint nan_point = still;
    nan_point.omega = std::nan("");
    CHECK(cmd_observability({}, nan_point, out, err) == kExitConfigError);
}

TEST_CASE("sweep axis parsing") {
    const SweepAxis a = parse_sweep_axis("hf.amplitude=0,0.25,0.5");
    CHECK(a.key == "hf.amplitude");
    CHECK(a.values == std::vector<double>{0, 0.25, 0.5});
    CHECK_THROWS_AS(parse_sweep_axis("hf.amplitude"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_axis("foo=1"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_axis("hf.mode=1"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_axis("hf.amplitude=1,x"), ConfigError);
}

TEST_CASE("single-point sweep reproduces a run") {
    const fs::path run_dir = scratch("sp_run"), sweep_dir = scratch("sp_sweep");
    std::ostringstream out, err;
    RunConfig run = short_run(run_dir, 0.1);
    run.overrides.push_back("hf.frequency=500");
    REQUIRE(cmd_run(run, out, err) == kExitOk);
    SweepConfig sweep;
    sweep.run = short_run(sweep_dir, 0.1);
    sweep.axes = {"hf.frequency=500"};
    REQUIRE(cmd_sweep(sweep, out, err) == kExitOk);
    CHECK(slurp(run_dir / "timeseries.csv") == slurp(sweep_dir / "point_000" / "timeseries.csv"));
    CHECK(slurp(run_dir / "report.json") == slurp(sweep_dir / "point_000" / "report.json"));
}

TEST_CASE("frequency sweep lists every point") {
    const fs::path dir = scratch("freq");
    std::ostringstream out, err;
    SweepConfig sweep;
    sweep.run = short_run(dir, 0.05);
    sweep.axes = {"hf.frequency=100,1000"};
    sweep.jobs = 2;
    REQUIRE(cmd_sweep(sweep, out, err) == kExitOk);
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string header, l1, l2, extra;
    std::getline(csv, header);
    std::getline(csv, l1);
    std::getline(csv, l2);
    CHECK_FALSE(std::getline(csv, extra));
    CHECK(header.rfind("point,hf.frequency,status,", 0) == 0);
    CHECK(l1.rfind("0,100,ok,", 0) == 0);
    CHECK(l2.rfind("1,1000,ok,", 0) == 0);
}

TEST_CASE("failed sweep points are recorded and the sweep continues") {
    const fs::path dir = scratch("fail");
    std::ostringstream out, err;
    SweepConfig sweep;
    sweep.run = short_run(dir, 0.1);
    sweep.axes = {"simulation.current_limit=5,1e4", "machine.Rs=0.01,-1"};
    CHECK(cmd_sweep(sweep, out, err) == kExitDiverged);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.find("0,5,0.01,diverged") != std::string::npos);
    CHECK(csv.find("1,5,-1,config_error") != std::string::npos);
    CHECK(csv.find("2,10000,0.01,ok") != std::string::npos);
    CHECK(csv.find("3,10000,-1,config_error") != std::string::npos);
    CHECK(fs::exists(dir / "point_002" / "timeseries.csv"));

    SweepConfig none;
    none.run = short_run(scratch("none"), 0.1);
    CHECK(cmd_sweep(none, out, err) == kExitConfigError);
}

TEST_CASE("amplitude sweep: injection is what restores the estimate") {
    const fs::path dir = scratch("amp");
    std::ostringstream out, err;
    SweepConfig sweep;
    sweep.run = short_run(dir, 1.5);
    sweep.axes = {"hf.amplitude=0,0.25,0.5"};
    REQUIRE(cmd_sweep(sweep, out, err) == kExitOk);
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<std::string> flags;
    while (std::getline(csv, line)) {
        // point,hf.amplitude,status,standstill_converged,...
        std::istringstream fields(line);
        std::string f;
        for (int k = 0; k < 4; ++k) {
            std::getline(fields, f, ',');
        }
        flags.push_back(f);
    }
    REQUIRE(flags.size() == 3);
    CHECK(flags[0] == "false");
    CHECK(flags[2] == "true");
}
