#include "mpbuck/controller.hpp"

#include "mpbuck/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpbuck {

void ControllerGains::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("ControllerGains: ") + what);
    };
    require(std::isfinite(t_d) && t_d > 0.0, "t_d > 0 required");
    require(std::isfinite(t_dd) && t_dd > 0.0, "t_dd > 0 required");
    require(std::isfinite(k_p) && k_p >= 0.0, "k_p >= 0 required");
    require(std::isfinite(k_i) && k_i >= 0.0, "k_i >= 0 required");
    require(std::isfinite(k_d) && k_d >= 0.0, "k_d >= 0 required");
    require(std::isfinite(k_dd) && k_dd >= 0.0, "k_dd >= 0 required");
    require(std::isfinite(u_ref) && u_ref > 0.0, "u_ref > 0 required");
}

ControllerOutput controller_step(const ControllerState& state, const ControllerGains& gains, double u_o,
                                 std::optional<double> d2u_estimate, double dt, double u_source) {
    ControllerOutput out;
    ControllerState& next = out.state;
    next = state;

    const double e = gains.u_ref - u_o;
    double de = 0.0;
    double d2e = 0.0;
    if (state.cycles >= 1) {
        de = (e - state.e_prev) / dt;
        if (d2u_estimate) {
            d2e = -*d2u_estimate;
        } else if (state.cycles >= 2) {
            d2e = (de - state.de_prev) / dt;
        }
    }

    // backward Euler on T dU/dt + U = K x
    next.u_ad = (gains.t_d * state.u_ad + dt * gains.k_d * de) / (gains.t_d + dt);
    next.u_dd = (gains.t_dd * state.u_dd + dt * gains.k_dd * d2e) / (gains.t_dd + dt);
    next.u_ai = state.u_ai + gains.k_i * e * dt;

    const double u_a = next.u_ad + next.u_ai + gains.k_p * e + next.u_dd;
    const double raw = (gains.u_ref + u_a) / u_source;
    out.duty = std::clamp(raw, 0.0, 1.0);
    next.saturated = out.duty != raw;
    next.e_prev = e;
    next.de_prev = de;
    next.cycles = state.cycles + 1;

    out.correction = u_a;
    out.error = e;
    return out;
}

double estimate_d2uc(const ConverterParams& params, double r_load, double d_total_current,
                     double d_capacitor_voltage) {
    return (d_total_current - d_capacitor_voltage / r_load) / params.capacitance;
}

double estimate_d2uc_averaged(const PlantState& state, const ConverterParams& params, double r_load,
                              std::span<const double> duties) {
    const double total = state.total_current();
    const double u_o = output_voltage(state.capacitor_voltage, total, params, r_load);
    double d_total = 0.0;
    for (std::size_t j = 0; j < state.phase_currents.size(); ++j) {
        d_total += (duties[j] * params.u_source - state.phase_currents[j] * params.r_winding - u_o) /
                   params.inductance;
    }
    const double d_uc = (total - u_o / r_load) / params.capacitance;
    return estimate_d2uc(params, r_load, d_total, d_uc);
}

BalancerState BalancerState::start(std::span<const double> currents, double filter_coefficient) {
    if (!(filter_coefficient > 0.0 && filter_coefficient <= 1.0))
        throw ConfigError("BalancerState: filter_coefficient must lie in (0, 1]");
    return BalancerState{{currents.begin(), currents.end()}, filter_coefficient};
}

BalancerState update_balancer(const BalancerState& state, std::span<const double> phase_currents) {
    BalancerState next = state;
    const double beta = state.filter_coefficient;
    for (std::size_t i = 0; i < next.filtered_currents.size(); ++i) {
        next.filtered_currents[i] = (1.0 - beta) * state.filtered_currents[i] + beta * phase_currents[i];
    }
    return next;
}

std::vector<double> balance_duties(const BalancerState& state, double d0, std::size_t n_phases) {
    std::vector<double> duties(n_phases, d0);
    if (n_phases < 2) return duties;

    const auto& f = state.filtered_currents;
    const double lowest = *std::min_element(f.begin(), f.end());
    double sum = 0.0;
    for (double v : f) sum += v - lowest;
    if (sum < kBalanceCurrentEpsilon) return duties;

    const double n = static_cast<double>(n_phases);
    const double scale = d0 * n / (n - 1.0);
    for (std::size_t i = 0; i < n_phases; ++i) {
        duties[i] = std::clamp((1.0 - (f[i] - lowest) / sum) * scale, 0.0, 1.0);
    }
    return duties;
}

}  // namespace mpbuck
