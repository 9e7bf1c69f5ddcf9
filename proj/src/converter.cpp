#include "mpbuck/converter.hpp"

#include "mpbuck/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mpbuck {

void ConverterParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("ConverterParams: ") + what);
    };
    require(n_phases >= 1, "n_phases >= 1 required");
    require(std::isfinite(inductance) && inductance > 0.0, "inductance > 0 required");
    require(std::isfinite(capacitance) && capacitance > 0.0, "capacitance > 0 required");
    require(std::isfinite(pwm_period) && pwm_period > 0.0, "pwm_period > 0 required");
    require(std::isfinite(u_source) && u_source > 0.0, "u_source > 0 required");
    require(std::isfinite(r_winding) && r_winding >= 0.0, "r_winding >= 0 required");
    require(std::isfinite(r_esr) && r_esr >= 0.0, "r_esr >= 0 required");
}

PlantState PlantState::zero(std::size_t n_phases) {
    PlantState s;
    s.phase_currents.assign(n_phases, 0.0);
    return s;
}

bool PlantState::all_finite() const {
    return std::isfinite(capacitor_voltage) && std::isfinite(time) &&
           std::all_of(phase_currents.begin(), phase_currents.end(), [](double i) { return std::isfinite(i); });
}

double PlantState::total_current() const {
    return std::accumulate(phase_currents.begin(), phase_currents.end(), 0.0);
}

LoadProfile::LoadProfile(std::vector<LoadSegment> segments, double r_min)
    : segments_(std::move(segments)), r_min_(r_min) {
    if (segments_.empty()) throw ConfigError("LoadProfile: at least one segment required");
    if (!(std::isfinite(r_min_) && r_min_ > 0.0)) throw ConfigError("LoadProfile: r_min > 0 required");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        const auto& s = segments_[k];
        if (!std::isfinite(s.start_time) || !std::isfinite(s.resistance_start) || !std::isfinite(s.ramp_rate))
            throw ConfigError("LoadProfile: segment " + std::to_string(k) + " has a non-finite field");
        if (k > 0 && !(s.start_time > segments_[k - 1].start_time))
            throw ConfigError("LoadProfile: segments must be sorted strictly by start_time");
    }
}

LoadProfile LoadProfile::constant(double resistance) {
    return LoadProfile({LoadSegment{0.0, resistance, 0.0}}, resistance);
}

double LoadProfile::at(double t) const {
    const auto& first = segments_.front();
    if (t <= first.start_time) return std::max(first.resistance_start, r_min_);
    // last segment whose start_time <= t
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const LoadSegment& s) { return v < s.start_time; });
    const auto& seg = *std::prev(it);
    const double r = seg.resistance_start + seg.ramp_rate * (t - seg.start_time);
    return std::max(r, r_min_);
}

double LoadProfile::minimum_over(double t_end) const {
    // each linear piece attains its extremes at its ends
    double lo = std::min(at(0.0), at(t_end));
    for (std::size_t k = 1; k < segments_.size() && segments_[k - 1].start_time < t_end; ++k) {
        const double t = std::min(segments_[k].start_time, t_end);
        const auto& prev = segments_[k - 1];
        lo = std::min({lo, at(t), std::max(prev.resistance_start + prev.ramp_rate * (t - prev.start_time), r_min_)});
    }
    return lo;
}

LoadProfile LoadProfile::scaled_magnitude(double factor) const {
    if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("scale factor must lie in (0, 1]");
    if (factor == 1.0) return *this;
    const double base = segments_.front().resistance_start;
    std::vector<LoadSegment> out = segments_;
    for (auto& s : out) {
        s.resistance_start = base + factor * (s.resistance_start - base);
        s.ramp_rate *= factor;
    }
    return LoadProfile(std::move(out), base + factor * (r_min_ - base));
}

LoadProfile LoadProfile::scaled_rate(double factor) const {
    if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("scale factor must lie in (0, 1]");
    std::vector<LoadSegment> out = segments_;
    for (auto& s : out) s.ramp_rate *= factor;
    return LoadProfile(std::move(out), r_min_);
}

int switch_state(double t, std::size_t phase_index, const ConverterParams& params, double duty) {
    const double period = params.pwm_period;
    const double offset = static_cast<double>(phase_index) * period / static_cast<double>(params.n_phases);
    double pos = std::fmod(t - offset, period);
    if (pos < 0.0) pos += period;
    if (pos >= period) pos = 0.0;  // -tiny + period rounds up to period
    return pos <= duty * period ? 1 : 0;
}

double steady_ripple_offset(std::size_t phase_index, const ConverterParams& params, double duty, double u_o) {
    const double period = params.pwm_period;
    const double offset = static_cast<double>(phase_index) * period / static_cast<double>(params.n_phases);
    double pos = std::fmod(-offset, period);
    if (pos < 0.0) pos += period;
    const double on = duty * period;
    const double swing = (params.u_source - u_o) * on / params.inductance;  // peak-to-peak
    if (on <= 0.0 || on >= period) return 0.0;
    if (pos <= on) return -0.5 * swing + swing * pos / on;
    return 0.5 * swing - swing * (pos - on) / (period - on);
}

std::vector<double> ripple_consistent_currents(std::span<const double> mean_currents, const ConverterParams& params,
                                               double duty, double u_o) {
    std::vector<double> out(mean_currents.begin(), mean_currents.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += steady_ripple_offset(j, params, duty, u_o);
    return out;
}

double output_voltage(double capacitor_voltage, double total_current, const ConverterParams& params,
                      double r_load) {
    return (capacitor_voltage + params.r_esr * total_current) / (1.0 + params.r_esr / r_load);
}

double output_voltage(const PlantState& state, const ConverterParams& params, double r_load) {
    return output_voltage(state.capacitor_voltage, state.total_current(), params, r_load);
}

double plant_derivatives(std::span<const double> currents, double capacitor_voltage,
                         const ConverterParams& params, double r_load, std::span<const int> switches,
                         std::span<double> d_currents) {
    double total = 0.0;
    for (double i : currents) total += i;
    const double u_o = output_voltage(capacitor_voltage, total, params, r_load);
    const double inv_l = 1.0 / params.inductance;
    for (std::size_t j = 0; j < currents.size(); ++j) {
        d_currents[j] = (switches[j] * params.u_source - currents[j] * params.r_winding - u_o) * inv_l;
    }
    return (total - u_o / r_load) / params.capacitance;
}

PlantDerivatives plant_derivatives(const PlantState& state, const ConverterParams& params, double r_load,
                                   std::span<const int> switch_states) {
    PlantDerivatives d;
    d.d_phase_currents.resize(state.phase_currents.size());
    d.d_capacitor_voltage = plant_derivatives(state.phase_currents, state.capacitor_voltage, params, r_load,
                                              switch_states, d.d_phase_currents);
    return d;
}

}  // namespace mpbuck
