#include "mpbuck/cli.hpp"
#include "mpbuck/scenario_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>

using namespace mpbuck;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = MPBUCK_SCENARIO_DIR;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"({
  "converter": {"n_phases": 2, "inductance_uH": 20, "capacitance_uF": 50, "r_winding_ohm": 0.02,
                "r_esr_ohm": 0.01, "u_source_V": 12, "pwm_period_us": 5},
  "load": {"r_min_ohm": 2.5, "segments": [{"start_us": 0, "resistance_ohm": 5},
                                          {"start_us": 50, "resistance_ohm": 5, "ramp_ohm_per_us": -1}]},
  "controller": {"u_ref_V": 3.3, "k_p": 1, "k_i": 1000},
  "simulation": {"t_end_us": 200, "steps_per_pwm_period": 16, "initial_state": "warm"},
  "band": {"u_min_V": 3.0, "u_max_V": 4.0}
})";

const char* kTinyPso = R"({
  "swarm_size": 3, "max_iterations": 2, "seed": 9, "threads": 1,
  "bounds": {"k_p": [0, 2], "k_d": [0, 1e-5], "k_dd": [0, 1e-11], "k_i": [0, 2000],
             "t_d_us": [1, 10], "t_dd_us": [1, 10]}
})";

const char* kRunaway = R"({
  "converter": {"n_phases": 1, "inductance_uH": 0.00001, "capacitance_uF": 1000000,
                "u_source_V": 12, "pwm_period_us": 1000},
  "load": {"segments": [{"resistance_ohm": 1000000}]},
  "controller": {"u_ref_V": 12},
  "simulation": {"t_end_us": 5000, "steps_per_pwm_period": 16},
  "band": {"u_min_V": 11, "u_max_V": 13}
})";

int run_cli(const RunManifest& m, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    const int code = run(m, log, err);
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("simulate writes trace, metrics and run record") {
    TempDir dir("mpbuck_cli_sim");
    RunManifest m;
    m.command = Command::simulate;
    m.scenario_path = kScenarios / "reference.json";
    m.gains_path = kScenarios / "gains" / "no_derivative.json";
    m.output_dir = dir.path / "out";
    m.quiet = true;
    REQUIRE(run_cli(m) == exit_code::ok);

    const std::string csv = read_file(m.output_dir / "trace.csv");
    CHECK(csv.substr(0, csv.find('\n')) == trace_csv_header(4));
    const Json metrics = Json::parse(read_file(m.output_dir / "metrics.json"));
    CHECK(metrics["outage"].get<double>() > 0.0);
    CHECK(fs::exists(m.output_dir / "plot.gp"));

    const Json rec = Json::parse(read_file(m.output_dir / "run.json"));
    CHECK(rec["command"] == "simulate");
    CHECK(rec["toolkit_version"] == MPBUCK_VERSION);
    CHECK(rec["scenario_hash"] == fnv1a_hex(read_file(m.scenario_path)));
    CHECK(rec["seed"].is_null());
}

TEST_CASE("sweep writes one metrics file per variant and a summary") {
    TempDir dir("mpbuck_cli_sweep");
    write_file_atomic(dir.path / "s.json", kSmall);
    RunManifest m;
    m.command = Command::sweep;
    m.scenario_path = dir.path / "s.json";
    m.output_dir = dir.path / "out";
    m.quiet = true;
    REQUIRE(run_cli(m) == exit_code::ok);
    const std::string csv = read_file(m.output_dir / "sweep_summary.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    for (const char* kind : {"magnitude", "rate"})
        for (const char* f : {"1", "0.5", "0.1"})
            CHECK(fs::exists(m.output_dir / (std::string("metrics_") + kind + "_" + f + ".json")));
}

TEST_CASE("stability report") {
    TempDir dir("mpbuck_cli_stab");
    RunManifest m;
    m.command = Command::stability;
    m.scenario_path = kScenarios / "reference.json";
    m.output_dir = dir.path;
    m.quiet = true;
    REQUIRE(run_cli(m) == exit_code::ok);
    const Json j = Json::parse(read_file(dir.path / "stability.json"));
    CHECK(j["r_load"].get<double>() == 200.0);
    CHECK(j["routh_hurwitz_stable"].get<bool>());
    CHECK(j["agreement"].get<bool>());
}

TEST_CASE("tune writes convergence and gains, and honours the seed override") {
    TempDir dir("mpbuck_cli_tune");
    write_file_atomic(dir.path / "s.json", kSmall);
    write_file_atomic(dir.path / "p.json", kTinyPso);
    RunManifest m;
    m.command = Command::tune;
    m.scenario_path = dir.path / "s.json";
    m.pso_path = dir.path / "p.json";
    m.output_dir = dir.path / "a";
    m.quiet = true;
    REQUIRE(run_cli(m) == exit_code::ok);
    const std::string conv = read_file(m.output_dir / "convergence.csv");
    CHECK(std::count(conv.begin(), conv.end(), '\n') == 4);
    const ControllerGains g = load_gains(m.output_dir / "best_gains.json");
    CHECK(g.u_ref == doctest::Approx(3.3));
    CHECK(fs::exists(m.output_dir / "trace.csv"));
    CHECK(Json::parse(read_file(m.output_dir / "run.json"))["seed"] == 9);

    m.output_dir = dir.path / "b";
    REQUIRE(run_cli(m) == exit_code::ok);
    CHECK(read_file(dir.path / "a" / "best_gains.json") == read_file(dir.path / "b" / "best_gains.json"));

    m.output_dir = dir.path / "c";
    m.seed_override = 77;
    REQUIRE(run_cli(m) == exit_code::ok);
    CHECK(Json::parse(read_file(m.output_dir / "run.json"))["seed"] == 77);
}

TEST_CASE("failures map to exit codes with a machine-readable error") {
    TempDir dir("mpbuck_cli_err");
    RunManifest m;
    m.command = Command::simulate;
    m.output_dir = dir.path / "out";
    m.quiet = true;
    std::string err;

    m.scenario_path = dir.path / "missing.json";
    CHECK(run_cli(m, &err) == exit_code::io_error);
    CHECK(Json::parse(err)["error"] == "IoError");

    Json bad = Json::parse(kSmall);
    bad["converter"]["n_phases"] = 0;
    write_file_atomic(dir.path / "bad.json", bad.dump());
    m.scenario_path = dir.path / "bad.json";
    CHECK(run_cli(m, &err) == exit_code::config_error);
    const Json e = Json::parse(read_file(m.output_dir / "error.json"));
    CHECK(e["exit_code"] == 2);
    CHECK(e["message"].get<std::string>().find("n_phases") != std::string::npos);

    bad = Json::parse(kSmall);
    bad["foo"] = 1;
    write_file_atomic(dir.path / "unknown.json", bad.dump());
    m.scenario_path = dir.path / "unknown.json";
    CHECK(run_cli(m, &err) == exit_code::config_error);
    CHECK(Json::parse(err)["error"] == "ParseError");

    write_file_atomic(dir.path / "runaway.json", kRunaway);
    m.scenario_path = dir.path / "runaway.json";
    CHECK(run_cli(m, &err) == exit_code::divergence);
    CHECK(Json::parse(err)["error"] == "NonFiniteState");

    m.command = Command::tune;
    m.scenario_path = kScenarios / "reference.json";
    m.pso_path.clear();
    CHECK(run_cli(m) == exit_code::config_error);
}
