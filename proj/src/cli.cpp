#include "mpbuck/cli.hpp"

#include "mpbuck/error.hpp"
#include "mpbuck/scenario_io.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace mpbuck {

namespace {

namespace fs = std::filesystem;

std::string command_name(Command c) {
    switch (c) {
    case Command::simulate: return "simulate";
    case Command::tune: return "tune";
    case Command::stability: return "stability";
    case Command::sweep: return "sweep";
    }
    return "unknown";
}

std::string factor_label(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", f);
    return buf;
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void write_run_record(const RunManifest& m, const std::string& scenario_text, const std::string& pso_text,
                      std::optional<std::uint64_t> seed) {
    Json run = {{"command", command_name(m.command)},
                {"toolkit_version", MPBUCK_VERSION},
                {"scenario_path", m.scenario_path.string()},
                {"scenario_hash", fnv1a_hex(scenario_text)}};
    if (!pso_text.empty()) {
        run["pso_path"] = m.pso_path.string();
        run["pso_hash"] = fnv1a_hex(pso_text);
    }
    if (m.gains_path) run["gains_path"] = m.gains_path->string();
    if (seed) run["seed"] = *seed;
    else run["seed"] = nullptr;
    write_json(m.output_dir / "run.json", run);
}

int execute(const RunManifest& m, std::ostream& log) {
    std::error_code ec;
    fs::create_directories(m.output_dir, ec);
    if (ec || !fs::is_directory(m.output_dir)) throw IoError("cannot create output directory '" + m.output_dir.string() + "'");

    const std::string scenario_text = read_file(m.scenario_path);
    Scenario scenario = load_scenario(m.scenario_path);
    if (m.gains_path) scenario.gains = load_gains(*m.gains_path);
    const fs::path out = m.output_dir;
    auto say = [&](const std::string& s) {
        if (!m.quiet) log << s << '\n';
    };

    switch (m.command) {
    case Command::simulate: {
        const SimResult r = simulate(scenario.params, scenario.gains, scenario.profile, scenario.sim, scenario.band);
        write_file_atomic(out / "trace.csv", trace_to_csv(r.trace));
        write_json(out / "metrics.json", metrics_to_json(r.metrics));
        write_file_atomic(out / "plot.gp", gnuplot_script(scenario.params.n_phases));
        write_run_record(m, scenario_text, "", std::nullopt);
        if (r.diverged) throw NonFiniteState("diverged at t = " + std::to_string(r.diverged_at) + " s");
        say("simulate: " + std::to_string(r.trace.size()) + " samples, outage " + std::to_string(r.metrics.outage) + " V");
        return exit_code::ok;
    }
    case Command::tune: {
        if (m.pso_path.empty()) throw ConfigError("tune requires --pso");
        const std::string pso_text = read_file(m.pso_path);
        TuneConfig cfg = load_tune_config(m.pso_path);
        if (m.seed_override) cfg.pso.seed = *m.seed_override;
        say("tune: swarm " + std::to_string(cfg.pso.swarm_size) + ", " + std::to_string(cfg.pso.max_iterations) +
            " iterations, seed " + std::to_string(cfg.pso.seed));
        const TuneResult t = tune(scenario, cfg);
        write_file_atomic(out / "convergence.csv", convergence_to_csv(t));
        write_json(out / "best_gains.json", gains_to_json(t.gains));
        const SimResult r = simulate(scenario.params, t.gains, scenario.profile, scenario.sim, scenario.band);
        write_file_atomic(out / "trace.csv", trace_to_csv(r.trace));
        write_json(out / "metrics.json", metrics_to_json(r.metrics));
        write_run_record(m, scenario_text, pso_text, cfg.pso.seed);
        say("tune: best objective " + std::to_string(t.value) + ", outage " + std::to_string(r.metrics.outage) + " V");
        return exit_code::ok;
    }
    case Command::stability: {
        const double r_load = scenario.profile.minimum_over(scenario.sim.t_end);
        const ReducedModel model = build_reduced_model(scenario.params, r_load);
        const StabilityReport rep = routh_hurwitz(model);
        write_json(out / "stability.json", stability_to_json(rep, model, r_load));
        write_run_record(m, scenario_text, "", std::nullopt);
        say(std::string("stability: ") + (rep.routh_hurwitz_stable ? "stable" : "unstable") + " at R_load = " +
            std::to_string(r_load) + " ohm");
        return exit_code::ok;
    }
    case Command::sweep: {
        const auto entries = robustness_sweep(to_vector(scenario.gains), scenario, scenario.sweep_factors);
        for (const auto& e : entries)
            write_json(out / ("metrics_" + to_string(e.kind) + "_" + factor_label(e.factor) + ".json"),
                       metrics_to_json(e.metrics));
        write_file_atomic(out / "sweep_summary.csv", sweep_to_csv(entries));
        write_run_record(m, scenario_text, "", std::nullopt);
        say("sweep: " + std::to_string(entries.size()) + " variants");
        return exit_code::ok;
    }
    }
    return exit_code::config_error;
}

void report(const RunManifest& m, std::ostream& err, const std::string& kind, const std::string& message, int code) {
    const Json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    err << j.dump() << '\n';
    std::error_code ec;
    if (fs::is_directory(m.output_dir, ec)) {
        try {
            write_json(m.output_dir / "error.json", j);
        } catch (const IoError&) {
        }
    }
}

}  // namespace

int run(const RunManifest& manifest, std::ostream& log, std::ostream& err) {
    try {
        return execute(manifest, log);
    } catch (const ParseError& e) {
        report(manifest, err, "ParseError", e.what(), exit_code::config_error);
        return exit_code::config_error;
    } catch (const ConfigError& e) {
        report(manifest, err, "ValidationError", e.what(), exit_code::config_error);
        return exit_code::config_error;
    } catch (const IoError& e) {
        report(manifest, err, "IoError", e.what(), exit_code::io_error);
        return exit_code::io_error;
    } catch (const NonFiniteState& e) {
        report(manifest, err, "NonFiniteState", e.what(), exit_code::divergence);
        return exit_code::divergence;
    } catch (const std::exception& e) {
        report(manifest, err, "InternalError", e.what(), 1);
        return 1;
    }
}

}  // namespace mpbuck
