#include "mpbuck/simulator.hpp"

#include "mpbuck/error.hpp"
#include "mpbuck/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

namespace mpbuck {

void SimConfig::validate(const ConverterParams& params) const {
    if (!(std::isfinite(t_end) && t_end > 0.0)) throw ConfigError("SimConfig: t_end > 0 required");
    if (steps_per_pwm_period < 16) throw ConfigError("SimConfig: steps_per_pwm_period >= 16 required");
    if (record_decimation < 1) throw ConfigError("SimConfig: record_decimation >= 1 required");
    if (!(balancer_filter_coefficient > 0.0 && balancer_filter_coefficient <= 1.0))
        throw ConfigError("SimConfig: balancer_filter_coefficient must lie in (0, 1]");
    if (!(divergence_limit > 0.0)) throw ConfigError("SimConfig: divergence_limit > 0 required");
    if (initial == InitialKind::explicit_) {
        if (initial_state.phase_currents.size() != params.n_phases)
            throw ConfigError("SimConfig: initial_state must carry exactly n_phases phase currents");
        if (!initial_state.all_finite()) throw ConfigError("SimConfig: initial_state must be finite");
    }
}

void VoltageBand::validate() const {
    if (!(std::isfinite(u_min) && std::isfinite(u_max) && u_min < u_max))
        throw ConfigError("VoltageBand: u_min_limit < u_max_limit required");
    if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ConfigError("VoltageBand: epsilon > 0 required");
}

double spread(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

std::string trace_csv_header(std::size_t n_phases) {
    std::string h = "time_s,u_o_V,u_c_V";
    for (std::size_t j = 1; j <= n_phases; ++j) h += ",i_" + std::to_string(j) + "_A";
    h += ",d0";
    for (std::size_t j = 1; j <= n_phases; ++j) h += ",d_" + std::to_string(j);
    h += ",r_load_ohm,error_V";
    return h;
}

namespace {

PlantState initial_plant(const ConverterParams& params, const ControllerGains& gains, const LoadProfile& profile,
                         const SimConfig& config) {
    switch (config.initial) {
    case InitialKind::zero:
        return PlantState::zero(params.n_phases);
    case InitialKind::warm: {
        PlantState s;
        s.capacitor_voltage = gains.u_ref;
        const double per_phase = gains.u_ref / profile.at(0.0) / static_cast<double>(params.n_phases);
        const std::vector<double> means(params.n_phases, per_phase);
        const double duty = std::clamp(gains.u_ref / params.u_source, 0.0, 1.0);
        s.phase_currents = ripple_consistent_currents(means, params, duty, gains.u_ref);
        return s;
    }
    case InitialKind::explicit_:
        break;
    }
    PlantState s = config.initial_state;
    s.time = 0.0;
    return s;
}

}  // namespace

SimResult simulate(const ConverterParams& params, const ControllerGains& gains, const LoadProfile& profile,
                   const SimConfig& config, const VoltageBand& band) {
    params.validate();
    gains.validate();
    config.validate(params);
    band.validate();

    const std::size_t n = params.n_phases;
    const std::size_t sub = config.steps_per_pwm_period;
    const double period = params.pwm_period;
    const double dt = period / static_cast<double>(sub);
    const auto total_steps = static_cast<std::size_t>(std::ceil(config.t_end / dt - 1e-9));

    const PlantState start = initial_plant(params, gains, profile, config);

    // y = [I_1 .. I_N, U_C]
    std::vector<double> y(n + 1);
    std::copy(start.phase_currents.begin(), start.phase_currents.end(), y.begin());
    y[n] = start.capacitor_voltage;

    std::vector<double> duties(n, std::clamp(gains.u_ref / params.u_source, 0.0, 1.0));
    double d0 = duties.front();
    std::vector<int> switches(n);
    std::vector<double> cycle_charge(n, 0.0);
    std::vector<double> cycle_mean(n, 0.0);

    ControllerState ctrl;
    // seeded with the first complete cycle mean; until then every phase runs at D0
    BalancerState balancer;
    bool balancer_seeded = false;

    SimResult result;
    SimTrace& tr = result.trace;
    tr.n_phases = n;
    const std::size_t expected = total_steps / config.record_decimation + 2;
    for (auto* v : {&tr.times, &tr.u_o, &tr.u_c, &tr.duty_total, &tr.r_load, &tr.error}) v->reserve(expected);
    tr.phase_currents.reserve(expected * n);
    tr.duty_per_phase.reserve(expected * n);

    auto total_current = [&](std::span<const double> state) {
        return std::accumulate(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    };

    auto record = [&](double t) {
        const double r = profile.at(t);
        const double u_o = output_voltage(y[n], total_current(y), params, r);
        tr.times.push_back(t);
        tr.u_o.push_back(u_o);
        tr.u_c.push_back(y[n]);
        tr.phase_currents.insert(tr.phase_currents.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        tr.duty_total.push_back(d0);
        tr.duty_per_phase.insert(tr.duty_per_phase.end(), duties.begin(), duties.end());
        tr.r_load.push_back(r);
        tr.error.push_back(gains.u_ref - u_o);
    };

    double cycle_start = 0.0;
    double substep_start = 0.0;
    // Stages at the ends of a substep take the one-sided limit of the switch
    // function from inside the substep, so an edge that falls on the grid is
    // integrated exactly instead of leaking one stage weight across it.
    const double nudge = 1e-6 * dt;
    // the switch function is T-periodic, so it is evaluated on the position inside the current cycle
    auto rhs = [&](double t_local, std::span<const double> state, std::span<double> dydt) {
        const double t_switch = std::clamp(t_local, substep_start + nudge, substep_start + dt - nudge);
        for (std::size_t j = 0; j < n; ++j) switches[j] = switch_state(t_switch, j, params, duties[j]);
        const double r = profile.at(cycle_start + t_local);
        dydt[n] = plant_derivatives(state.first(n), state[n], params, r, switches, dydt.first(n));
    };

    Rk4Stepper stepper(n + 1);
    for (std::size_t step = 0; step <= total_steps; ++step) {
        const std::size_t in_cycle = step % sub;
        const double t = static_cast<double>(step) * dt;

        if (in_cycle == 0 && step < total_steps) {
            cycle_start = t;
            const double r = profile.at(t);
            PlantState now;
            now.phase_currents.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
            now.capacitor_voltage = y[n];
            now.time = t;
            const double u_o = output_voltage(now, params, r);

            std::optional<double> d2u;
            if (config.second_derivative_source == SecondDerivativeSource::model_based)
                d2u = estimate_d2uc_averaged(now, params, r, duties);

            const ControllerOutput c = controller_step(ctrl, gains, u_o, d2u, period, params.u_source);
            ctrl = c.state;
            d0 = c.duty;

            if (step > 0) {
                for (std::size_t j = 0; j < n; ++j) cycle_mean[j] = cycle_charge[j] / period;
                if (balancer_seeded) {
                    balancer = update_balancer(balancer, cycle_mean);
                } else {
                    balancer = BalancerState::start(cycle_mean, config.balancer_filter_coefficient);
                    result.filtered_currents_start = balancer.filtered_currents;
                    balancer_seeded = true;
                }
            }
            std::fill(cycle_charge.begin(), cycle_charge.end(), 0.0);

            if (config.balancing == Balancing::arithmetic && balancer_seeded) {
                duties = balance_duties(balancer, d0, n);
            } else {
                std::fill(duties.begin(), duties.end(), d0);
            }
        }

        if (step % config.record_decimation == 0 || step == total_steps) record(t);
        if (step == total_steps) break;

        const double t_local = static_cast<double>(in_cycle) * dt;
        substep_start = t_local;
        for (std::size_t j = 0; j < n; ++j) cycle_charge[j] += 0.5 * dt * y[j];
        stepper.step(rhs, t_local, y, dt);
        for (std::size_t j = 0; j < n; ++j) cycle_charge[j] += 0.5 * dt * y[j];

        const bool bad = std::any_of(y.begin(), y.end(), [&](double v) {
            return !std::isfinite(v) || std::abs(v) > config.divergence_limit;
        });
        if (bad) {
            result.diverged = true;
            result.diverged_at = static_cast<double>(step + 1) * dt;
            break;
        }
    }

    result.filtered_currents_end = balancer.filtered_currents;
    result.metrics = compute_metrics(tr, band.u_min, band.u_max, band.epsilon);
    result.metrics.diverged = result.diverged;
    if (result.diverged) result.metrics.settled = false;
    return result;
}

SimMetrics compute_metrics(const SimTrace& trace, double u_min_limit, double u_max_limit, double epsilon) {
    if (trace.empty()) throw EmptyTrace("compute_metrics: trace has no samples");
    SimMetrics m;
    const auto [lo, hi] = std::minmax_element(trace.u_o.begin(), trace.u_o.end());
    m.u_min = *lo;
    m.u_max = *hi;

    const double count = static_cast<double>(trace.error.size());
    const double mean = std::accumulate(trace.error.begin(), trace.error.end(), 0.0) / count;
    double ss = 0.0;
    for (double e : trace.error) ss += (e - mean) * (e - mean);
    m.error_stddev = std::sqrt(ss / count);

    m.outage = std::max(u_min_limit + epsilon - m.u_min, m.u_max - u_max_limit - epsilon);

    // settled: the final tenth of the record stays inside the band
    const std::size_t tail = std::max<std::size_t>(1, trace.size() / 10);
    const std::size_t first_tail = trace.size() - tail;
    m.settled = std::all_of(trace.u_o.begin() + static_cast<std::ptrdiff_t>(first_tail), trace.u_o.end(),
                            [&](double u) { return u >= u_min_limit && u <= u_max_limit; });

    if (trace.n_phases > 0) {
        std::vector<double> means(trace.n_phases, 0.0);
        for (std::size_t s = first_tail; s < trace.size(); ++s)
            for (std::size_t j = 0; j < trace.n_phases; ++j) means[j] += trace.current(s, j);
        for (double& v : means) v /= static_cast<double>(tail);
        m.phase_current_spread_final = spread(means);
    }
    return m;
}

}  // namespace mpbuck
