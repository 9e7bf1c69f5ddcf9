#include "mpbuck/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Multiphase buck converter transient simulation and controller tuning"};
    app.require_subcommand(1);

    mpbuck::RunManifest manifest;
    std::string scenario, pso, gains, out = ".";
    std::uint64_t seed = 0;

    const std::map<std::string, mpbuck::Command> commands{{"simulate", mpbuck::Command::simulate},
                                                          {"tune", mpbuck::Command::tune},
                                                          {"stability", mpbuck::Command::stability},
                                                          {"sweep", mpbuck::Command::sweep}};
    const std::map<std::string, std::string> help{
        {"simulate", "Run one closed-loop transient; writes trace.csv and metrics.json"},
        {"tune", "Tune the controller constants with PSO; writes convergence.csv and best_gains.json"},
        {"stability", "Routh-Hurwitz screen of the averaged plant; writes stability.json"},
        {"sweep", "Re-run at scaled disturbance magnitude and rate; writes sweep_summary.csv"}};

    for (const auto& [name, cmd] : commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--scenario", scenario, "Scenario JSON file")->required();
        sub->add_option("--out", out, "Output directory");
        sub->add_flag("--quiet", manifest.quiet, "Suppress progress output");
        if (cmd == mpbuck::Command::tune) {
            sub->add_option("--pso", pso, "PSO configuration JSON file")->required();
            sub->add_option("--seed", seed, "Override the PSO seed");
        } else if (cmd != mpbuck::Command::stability) {
            sub->add_option("--gains", gains, "Controller gains JSON (as written by tune)");
        }
        sub->callback([&manifest, cmd = cmd] { manifest.command = cmd; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : mpbuck::exit_code::config_error;
    }

    manifest.scenario_path = scenario;
    manifest.pso_path = pso;
    manifest.output_dir = out;
    if (!gains.empty()) manifest.gains_path = gains;
    for (auto* sub : app.get_subcommands())
        if (sub->get_name() == "tune" && sub->count("--seed") > 0) manifest.seed_override = seed;

    return mpbuck::run(manifest, std::cout, std::cerr);
}
