#pragma once

// Plant model of an N-phase interleaved buck converter: N identical
// inductor branches with ideal switches feeding one output capacitor with
// series resistance, driven into a time-varying resistive load.
//
// All quantities are SI (s, H, F, ohm, V, A).

#include <cstddef>
#include <span>
#include <vector>

namespace mpbuck {

struct ConverterParams {
    std::size_t n_phases = 1;
    double inductance = 0.0;   ///< per-phase inductance L [H]
    double capacitance = 0.0;  ///< output capacitance C [F]
    double r_winding = 0.0;    ///< per-phase series resistance R_L [ohm]
    double r_esr = 0.0;        ///< capacitor series resistance R_C [ohm]
    double u_source = 0.0;     ///< input voltage U_S [V]
    double pwm_period = 0.0;   ///< switching and control period T [s]

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    bool operator==(const ConverterParams&) const = default;
};

struct PlantState {
    std::vector<double> phase_currents;  ///< I_j [A]
    double capacitor_voltage = 0.0;      ///< U_C [V]
    double time = 0.0;                   ///< [s]

    static PlantState zero(std::size_t n_phases);

    bool all_finite() const;
    double total_current() const;

    bool operator==(const PlantState&) const = default;
};

struct PlantDerivatives {
    std::vector<double> d_phase_currents;  ///< dI_j/dt [A/s]
    double d_capacitor_voltage = 0.0;      ///< dU_C/dt [V/s]
};

/// One piece of a piecewise-linear load: starting at `start_time` the
/// resistance is `resistance_start + ramp_rate * (t - start_time)` until
/// the next segment begins.
struct LoadSegment {
    double start_time = 0.0;        ///< [s]
    double resistance_start = 0.0;  ///< [ohm]
    double ramp_rate = 0.0;         ///< [ohm/s]

    bool operator==(const LoadSegment&) const = default;
};

/// Piecewise-linear load resistance with a lower floor.
class LoadProfile {
public:
    LoadProfile() = default;
    /// Throws ConfigError when segments are empty, not strictly sorted by
    /// start time, non-finite, or when r_min is not positive.
    LoadProfile(std::vector<LoadSegment> segments, double r_min);

    /// Single constant resistance for all t.
    static LoadProfile constant(double resistance);

    /// Resistance at time t, never below r_min.
    double at(double t) const;

    /// Lowest resistance reached on [0, t_end].
    double minimum_over(double t_end) const;

    /// Every deviation from the first segment's resistance multiplied by
    /// `factor` (factor in (0, 1]); rates and the floor are scaled alike.
    LoadProfile scaled_magnitude(double factor) const;

    /// Every ramp rate multiplied by `factor`; start resistances and the
    /// floor are kept, so ramps reach the same floor more slowly.
    LoadProfile scaled_rate(double factor) const;

    const std::vector<LoadSegment>& segments() const { return segments_; }
    double r_min() const { return r_min_; }

    bool operator==(const LoadProfile&) const = default;

private:
    std::vector<LoadSegment> segments_{LoadSegment{0.0, 1.0, 0.0}};
    double r_min_ = 1e-3;
};

/// Per-phase PWM switch function. Phase j is shifted by j*T/N and is on
/// while the (non-negative) position of t - j*T/N inside the period is at
/// most duty*T.
int switch_state(double t, std::size_t phase_index, const ConverterParams& params, double duty);

/// Output voltage from the capacitor voltage and the series-resistance
/// constraint, solved in closed form.
double output_voltage(const PlantState& state, const ConverterParams& params, double r_load);
double output_voltage(double capacitor_voltage, double total_current, const ConverterParams& params,
                      double r_load);

/// Right-hand side of the phase-current and capacitor-voltage equations.
/// Writes dI_j/dt into `d_currents` and returns dU_C/dt.
double plant_derivatives(std::span<const double> currents, double capacitor_voltage,
                         const ConverterParams& params, double r_load, std::span<const int> switches,
                         std::span<double> d_currents);

PlantDerivatives plant_derivatives(const PlantState& state, const ConverterParams& params, double r_load,
                                   std::span<const int> switch_states);

/// Deviation of phase `phase_index` from its cycle-mean current at t = 0 in
/// periodic steady state at constant `duty` and output voltage `u_o`
/// (triangular ripple, winding resistance neglected).
double steady_ripple_offset(std::size_t phase_index, const ConverterParams& params, double duty, double u_o);

/// Phase currents at t = 0 whose cycle means equal `mean_currents`.
std::vector<double> ripple_consistent_currents(std::span<const double> mean_currents, const ConverterParams& params,
                                               double duty, double u_o);

inline double load_resistance(const LoadProfile& profile, double t) { return profile.at(t); }

}  // namespace mpbuck
