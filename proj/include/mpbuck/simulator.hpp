#pragma once

// Closed-loop time-domain simulation: fixed-step RK4 on the switched plant,
// controller and balancer updated once per PWM period (stair-stepped duty).

#include "mpbuck/controller.hpp"
#include "mpbuck/converter.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace mpbuck {

enum class SecondDerivativeSource { model_based, finite_difference };
enum class Balancing { off, arithmetic };

enum class InitialKind {
    zero,      ///< all currents and U_C zero
    warm,      ///< U_C = U_ref, phase currents share the initial load current, with their steady ripple
    explicit_  ///< `SimConfig::initial_state` as given
};

struct SimConfig {
    double t_end = 0.0;                      ///< [s]
    std::size_t steps_per_pwm_period = 64;
    std::size_t record_decimation = 1;
    InitialKind initial = InitialKind::zero;
    PlantState initial_state;                ///< used when initial == explicit_
    SecondDerivativeSource second_derivative_source = SecondDerivativeSource::model_based;
    Balancing balancing = Balancing::off;
    double balancer_filter_coefficient = 0.1;
    double divergence_limit = 1e6;           ///< any |state| above this aborts the run

    void validate(const ConverterParams& params) const;

    bool operator==(const SimConfig&) const = default;
};

/// Allowed output-voltage band and the outage margin.
struct VoltageBand {
    double u_min = 0.0;     ///< [V]
    double u_max = 0.0;     ///< [V]
    double epsilon = 1e-6;  ///< [V]

    void validate() const;

    bool operator==(const VoltageBand&) const = default;
};

struct SimTrace {
    std::size_t n_phases = 0;
    std::vector<double> times;
    std::vector<double> u_o;
    std::vector<double> u_c;
    std::vector<double> phase_currents;  ///< row-major, samples x n_phases
    std::vector<double> duty_total;
    std::vector<double> duty_per_phase;  ///< row-major, samples x n_phases
    std::vector<double> r_load;
    std::vector<double> error;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double current(std::size_t sample, std::size_t phase) const { return phase_currents[sample * n_phases + phase]; }
    double duty(std::size_t sample, std::size_t phase) const { return duty_per_phase[sample * n_phases + phase]; }
};

struct SimMetrics {
    double u_min = 0.0;
    double u_max = 0.0;
    double error_stddev = 0.0;
    double outage = 0.0;
    bool settled = false;
    double phase_current_spread_final = 0.0;
    bool diverged = false;
};

struct SimResult {
    SimTrace trace;
    SimMetrics metrics;
    bool diverged = false;
    double diverged_at = 0.0;                    ///< time of the abort when diverged [s]
    std::vector<double> filtered_currents_start; ///< balancer estimates after the first control cycle
    std::vector<double> filtered_currents_end;   ///< balancer estimates after the last control cycle
};

/// Runs the closed loop from t = 0 to config.t_end. Divergence is reported
/// through SimResult::diverged, not thrown. Throws ConfigError on invalid
/// arguments.
SimResult simulate(const ConverterParams& params, const ControllerGains& gains, const LoadProfile& profile,
                   const SimConfig& config, const VoltageBand& band);

/// Transient-quality statistics of a recorded trace. The outage is the
/// worst excursion beyond the band widened by epsilon and is negative when
/// the trace stays inside. Throws EmptyTrace.
SimMetrics compute_metrics(const SimTrace& trace, double u_min_limit, double u_max_limit, double epsilon);

/// max - min of the entries.
double spread(const std::vector<double>& values);

/// CSV header for a trace with `n_phases` phases.
std::string trace_csv_header(std::size_t n_phases);

}  // namespace mpbuck
