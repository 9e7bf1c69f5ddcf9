#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace mpbuck {

enum class Command { simulate, tune, stability, sweep };

struct RunManifest {
    Command command = Command::simulate;
    std::filesystem::path scenario_path;
    std::filesystem::path pso_path;                  ///< tune only
    std::optional<std::filesystem::path> gains_path; ///< replaces the scenario's controller gains
    std::filesystem::path output_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int divergence = 3;
inline constexpr int io_error = 4;
}  // namespace exit_code

/// Executes one subcommand, writing its outputs into manifest.output_dir.
/// Failures are reported as error.json in the output directory (when it is
/// writable) and on `err`; the return value is the process exit status.
int run(const RunManifest& manifest, std::ostream& log, std::ostream& err);

}  // namespace mpbuck
