#pragma once

// JSON configuration files and CSV/JSON result files.
//
// Scenario files use unit-bearing keys (for example "pwm_period_us",
// "inductance_uH") and are converted to SI on load. Unknown keys are
// rejected.

#include "mpbuck/optimizer.hpp"
#include "mpbuck/simulator.hpp"
#include "mpbuck/stability.hpp"

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mpbuck {

using Json = nlohmann::ordered_json;

Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& s);
/// Throws ParseError (syntax, unknown key, wrong type) or ConfigError
/// (invariant violation), IoError when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

TuneConfig tune_config_from_json(const Json& j);
TuneConfig load_tune_config(const std::filesystem::path& path);

/// ControllerGains under their field names, SI units.
ControllerGains gains_from_json(const Json& j);
Json gains_to_json(const ControllerGains& g);
ControllerGains load_gains(const std::filesystem::path& path);

Json metrics_to_json(const SimMetrics& m);
Json stability_to_json(const StabilityReport& r, const ReducedModel& model, double r_load);

std::string trace_to_csv(const SimTrace& trace);
std::string convergence_to_csv(const TuneResult& r);
std::string sweep_to_csv(const std::vector<SweepEntry>& entries);

/// Text of a gnuplot script plotting trace.csv from the same directory.
std::string gnuplot_script(std::size_t n_phases);

/// Writes through a temporary file renamed into place; throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mpbuck
