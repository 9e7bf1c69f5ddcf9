#pragma once

// Global-best particle swarm optimization and the controller-tuning
// objective built on the closed-loop simulator.

#include "mpbuck/controller.hpp"
#include "mpbuck/converter.hpp"
#include "mpbuck/simulator.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mpbuck {

/// Everything needed to run and score one closed-loop transient.
struct Scenario {
    ConverterParams params;
    LoadProfile profile;
    SimConfig sim;
    VoltageBand band;
    ControllerGains gains;  ///< u_ref is always used; the tunables only when simulating directly
    std::vector<double> sweep_factors{1.0, 0.5, 0.1};

    void validate() const;

    bool operator==(const Scenario&) const = default;
};

/// Order of the tunable constants in a gains vector.
inline constexpr std::array<const char*, 6> kGainNames{"k_p", "k_d", "k_dd", "k_i", "t_d", "t_dd"};
using GainVector = std::array<double, 6>;

GainVector to_vector(const ControllerGains& gains);
ControllerGains from_vector(const GainVector& x, double u_ref);

/// Returned for runs that diverge; larger than any finite objective value.
inline constexpr double kDivergencePenalty = 1e9;

/// Barrier on the band outage plus the error standard deviation; the
/// outage is clamped at zero before the logarithm.
double objective_from_metrics(const SimMetrics& metrics, double epsilon);
double objective(const GainVector& x, const Scenario& scenario);

struct PsoConfig {
    std::size_t swarm_size = 30;
    std::size_t max_iterations = 100;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double velocity_clamp_fraction = 0.2;
    std::uint64_t seed = 1;
    std::vector<double> x_min;
    std::vector<double> x_max;
    std::size_t threads = 0;  ///< 0 selects the hardware concurrency

    void validate() const;
};

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double best_value = 0.0;
    double current_value = 0.0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Swarm state with explicit iteration control. Evaluations inside one
/// iteration may run on several threads; results do not depend on it.
class Swarm {
public:
    /// Positions uniform in the box, velocities uniform in +-clamp*width.
    explicit Swarm(PsoConfig config);
    /// Caller-supplied particles (positions must lie in the box).
    Swarm(PsoConfig config, std::vector<Particle> particles);

    /// Evaluates the initial positions and sets personal and global bests.
    void initialize(const Objective& objective);
    /// One velocity/position update followed by evaluation.
    void iterate(const Objective& objective);

    const std::vector<Particle>& particles() const { return particles_; }
    const std::vector<double>& best_position() const { return best_position_; }
    double best_value() const { return best_value_; }

private:
    void evaluate(const Objective& objective);
    void absorb();

    PsoConfig config_;
    std::mt19937_64 rng_;
    std::vector<Particle> particles_;
    std::vector<double> best_position_;
    double best_value_ = 0.0;
};

struct PsoResult {
    std::vector<double> best_position;
    double best_value = 0.0;
    std::vector<double> history;                      ///< global best value after each iteration (index 0 = initial)
    std::vector<std::vector<double>> history_positions;
};

PsoResult pso_minimize(const Objective& objective, const PsoConfig& config);

/// PSO settings for controller tuning. With `frozen_t_d` set, t_d is held
/// fixed and the search runs over the remaining five constants.
struct TuneConfig {
    PsoConfig pso;  ///< x_min/x_max are six-vectors in kGainNames order
    std::optional<double> frozen_t_d;

    void validate() const;
};

struct TuneResult {
    ControllerGains gains;
    double value = 0.0;
    std::vector<double> history;
    std::vector<GainVector> history_gains;
};

TuneResult tune(const Scenario& scenario, const TuneConfig& config);

enum class SweepKind { magnitude, rate };

struct SweepEntry {
    SweepKind kind = SweepKind::magnitude;
    double factor = 1.0;
    SimMetrics metrics;
};

/// Magnitude-scaled variants for every factor, then rate-scaled variants.
std::vector<SweepEntry> robustness_sweep(const GainVector& best_gains, const Scenario& scenario,
                                         std::span<const double> scale_factors);

std::string to_string(SweepKind kind);

}  // namespace mpbuck
