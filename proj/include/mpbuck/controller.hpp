#pragma once

// Output-voltage PID controller with filtered first- and second-derivative
// branches, and the arithmetic phase-current balancer.

#include "mpbuck/converter.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mpbuck {

struct ControllerGains {
    double k_p = 0.0;   ///< [V/V]
    double k_i = 0.0;   ///< [V/(V s)]
    double k_d = 0.0;   ///< [V s/V]
    double k_dd = 0.0;  ///< [V s^2/V]
    double t_d = 1e-6;  ///< derivative filter time constant [s]
    double t_dd = 1e-6; ///< second-derivative filter time constant [s]
    double u_ref = 1.0; ///< [V]

    void validate() const;

    bool operator==(const ControllerGains&) const = default;
};

struct ControllerState {
    double u_ad = 0.0;     ///< filtered derivative correction [V]
    double u_ai = 0.0;     ///< integral correction [V]
    double u_dd = 0.0;     ///< filtered second-derivative correction [V]
    double e_prev = 0.0;   ///< error at the previous control cycle [V]
    double de_prev = 0.0;  ///< error derivative at the previous control cycle [V/s]
    std::size_t cycles = 0;  ///< completed control cycles; 0 means uninitialized
    bool saturated = false;  ///< last duty hit the [0, 1] clamp

    bool initialized() const { return cycles > 0; }
};

struct ControllerOutput {
    ControllerState state;
    double duty = 0.0;        ///< D0 in [0, 1]
    double correction = 0.0;  ///< U_a before saturation [V]
    double error = 0.0;       ///< e = U_ref - U_O [V]
};

/// One control cycle. `d2u_estimate` is the model-based second derivative
/// of the output voltage; without it d^2e/dt^2 is taken from a double
/// finite difference of the sampled error.
ControllerOutput controller_step(const ControllerState& state, const ControllerGains& gains, double u_o,
                                 std::optional<double> d2u_estimate, double dt, double u_source);

/// Second derivative of the capacitor voltage from the time derivative of
/// the capacitor charge balance: (sum dI_j/dt - (dU_C/dt)/R_load) / C.
double estimate_d2uc(const ConverterParams& params, double r_load, double d_total_current,
                     double d_capacitor_voltage);

/// Same, with the phase-current derivatives taken from the state-space
/// average of the switch function: each phase is on for the fraction
/// `duties[j]` of the cycle.
double estimate_d2uc_averaged(const PlantState& state, const ConverterParams& params, double r_load,
                              std::span<const double> duties);

/// Spread below which the balancer treats all phase currents as equal [A].
inline constexpr double kBalanceCurrentEpsilon = 1e-9;

struct BalancerState {
    std::vector<double> filtered_currents;  ///< low-pass estimates of the phase currents [A]
    double filter_coefficient = 0.1;        ///< beta in (0, 1], per control cycle

    static BalancerState start(std::span<const double> currents, double filter_coefficient);
};

/// First-order low-pass update: f <- (1 - beta) f + beta I.
BalancerState update_balancer(const BalancerState& state, std::span<const double> phase_currents);

/// Per-phase duties that shift duty away from phases carrying more current
/// while keeping their mean at d0 (unless a phase clamps at 0 or 1).
std::vector<double> balance_duties(const BalancerState& state, double d0, std::size_t n_phases);

}  // namespace mpbuck
