#include "mpbuck/optimizer.hpp"

#include "mpbuck/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace mpbuck {

void Scenario::validate() const {
    params.validate();
    gains.validate();
    sim.validate(params);
    band.validate();
    for (double f : sweep_factors)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("Scenario: sweep factors must lie in (0, 1]");
}

GainVector to_vector(const ControllerGains& g) { return {g.k_p, g.k_d, g.k_dd, g.k_i, g.t_d, g.t_dd}; }

ControllerGains from_vector(const GainVector& x, double u_ref) {
    ControllerGains g;
    g.k_p = x[0];
    g.k_d = x[1];
    g.k_dd = x[2];
    g.k_i = x[3];
    g.t_d = x[4];
    g.t_dd = x[5];
    g.u_ref = u_ref;
    return g;
}

double objective_from_metrics(const SimMetrics& metrics, double epsilon) {
    if (metrics.diverged || !std::isfinite(metrics.outage) || !std::isfinite(metrics.error_stddev))
        return kDivergencePenalty;
    const double barrier = std::log(std::max(metrics.outage, 0.0) + epsilon) - std::log(epsilon);
    return barrier + metrics.error_stddev;
}

double objective(const GainVector& x, const Scenario& scenario) {
    const ControllerGains gains = from_vector(x, scenario.gains.u_ref);
    const SimResult r = simulate(scenario.params, gains, scenario.profile, scenario.sim, scenario.band);
    return objective_from_metrics(r.metrics, scenario.band.epsilon);
}

void PsoConfig::validate() const {
    if (swarm_size < 2) throw ConfigError("PsoConfig: swarm_size >= 2 required");
    if (x_min.empty() || x_min.size() != x_max.size())
        throw ConfigError("PsoConfig: x_min and x_max must be non-empty and of equal length");
    for (std::size_t d = 0; d < x_min.size(); ++d) {
        if (!(std::isfinite(x_min[d]) && std::isfinite(x_max[d]) && x_min[d] < x_max[d]))
            throw ConfigError("PsoConfig: x_min < x_max required on axis " + std::to_string(d));
    }
    if (!(velocity_clamp_fraction > 0.0 && velocity_clamp_fraction <= 1.0))
        throw ConfigError("PsoConfig: velocity_clamp_fraction must lie in (0, 1]");
    if (!(std::isfinite(inertia) && std::isfinite(cognitive) && std::isfinite(social)))
        throw ConfigError("PsoConfig: coefficients must be finite");
}

Swarm::Swarm(PsoConfig config) : config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
    const std::size_t dim = config_.x_min.size();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    particles_.resize(config_.swarm_size);
    for (auto& p : particles_) {
        p.position.resize(dim);
        p.velocity.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const double width = config_.x_max[d] - config_.x_min[d];
            p.position[d] = config_.x_min[d] + unit(rng_) * width;
            p.velocity[d] = (2.0 * unit(rng_) - 1.0) * config_.velocity_clamp_fraction * width;
        }
    }
}

Swarm::Swarm(PsoConfig config, std::vector<Particle> particles)
    : config_(std::move(config)), rng_(config_.seed), particles_(std::move(particles)) {
    if (particles_.empty()) throw ConfigError("Swarm: at least one particle required");
    const std::size_t dim = config_.x_min.size();
    for (const auto& p : particles_) {
        if (p.position.size() != dim || p.velocity.size() != dim)
            throw ConfigError("Swarm: particle dimension does not match the box");
        for (std::size_t d = 0; d < dim; ++d)
            if (p.position[d] < config_.x_min[d] || p.position[d] > config_.x_max[d])
                throw ConfigError("Swarm: particle outside the box");
    }
}

void Swarm::evaluate(const Objective& objective) {
    std::size_t workers = config_.threads == 0 ? std::thread::hardware_concurrency() : config_.threads;
    workers = std::clamp<std::size_t>(workers, 1, particles_.size());
    if (workers == 1) {
        for (auto& p : particles_) p.current_value = objective(p.position);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < particles_.size(); i = next++)
            particles_[i].current_value = objective(particles_[i].position);
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
}

void Swarm::absorb() {
    for (auto& p : particles_) {
        if (p.current_value < p.best_value) {
            p.best_value = p.current_value;
            p.best_position = p.position;
        }
        if (p.best_value < best_value_) {
            best_value_ = p.best_value;
            best_position_ = p.best_position;
        }
    }
}

void Swarm::initialize(const Objective& objective) {
    evaluate(objective);
    for (auto& p : particles_) {
        p.best_value = p.current_value;
        p.best_position = p.position;
    }
    best_value_ = particles_.front().best_value;
    best_position_ = particles_.front().best_position;
    absorb();
}

void Swarm::iterate(const Objective& objective) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t dim = config_.x_min.size();
    for (auto& p : particles_) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double r1 = unit(rng_);
            const double r2 = unit(rng_);
            const double lo = config_.x_min[d];
            const double hi = config_.x_max[d];
            const double v_max = config_.velocity_clamp_fraction * (hi - lo);
            double v = config_.inertia * p.velocity[d] + config_.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                       config_.social * r2 * (best_position_[d] - p.position[d]);
            v = std::clamp(v, -v_max, v_max);
            double x = p.position[d] + v;
            if (x < lo) {
                x = lo;
                v = 0.0;
            } else if (x > hi) {
                x = hi;
                v = 0.0;
            }
            p.position[d] = x;
            p.velocity[d] = v;
        }
    }
    evaluate(objective);
    absorb();
}

PsoResult pso_minimize(const Objective& objective, const PsoConfig& config) {
    Swarm swarm(config);
    swarm.initialize(objective);
    PsoResult r;
    r.history.push_back(swarm.best_value());
    r.history_positions.push_back(swarm.best_position());
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        swarm.iterate(objective);
        r.history.push_back(swarm.best_value());
        r.history_positions.push_back(swarm.best_position());
    }
    r.best_position = swarm.best_position();
    r.best_value = swarm.best_value();
    return r;
}

void TuneConfig::validate() const {
    if (pso.x_min.size() != kGainNames.size() || pso.x_max.size() != kGainNames.size())
        throw ConfigError("TuneConfig: bounds must cover all six constants");
    pso.validate();
    for (std::size_t d = 0; d < 4; ++d)
        if (pso.x_min[d] < 0.0) throw ConfigError(std::string("TuneConfig: lower bound of ") + kGainNames[d] + " must be >= 0");
    if (!(pso.x_min[4] > 0.0) || !(pso.x_min[5] > 0.0))
        throw ConfigError("TuneConfig: lower bounds of t_d and t_dd must be > 0");
    if (frozen_t_d && !(*frozen_t_d > 0.0)) throw ConfigError("TuneConfig: frozen t_d must be > 0");
}

TuneResult tune(const Scenario& scenario, const TuneConfig& config) {
    config.validate();
    scenario.validate();

    // search axes are all six constants, or all but t_d when it is frozen
    std::vector<std::size_t> axes;
    for (std::size_t d = 0; d < kGainNames.size(); ++d)
        if (!(config.frozen_t_d && d == 4)) axes.push_back(d);

    PsoConfig pso = config.pso;
    pso.x_min.clear();
    pso.x_max.clear();
    for (std::size_t d : axes) {
        pso.x_min.push_back(config.pso.x_min[d]);
        pso.x_max.push_back(config.pso.x_max[d]);
    }

    auto expand = [&](std::span<const double> x) {
        GainVector g{};
        if (config.frozen_t_d) g[4] = *config.frozen_t_d;
        for (std::size_t k = 0; k < axes.size(); ++k) g[axes[k]] = x[k];
        return g;
    };

    const PsoResult r = pso_minimize([&](std::span<const double> x) { return objective(expand(x), scenario); }, pso);

    TuneResult out;
    out.gains = from_vector(expand(r.best_position), scenario.gains.u_ref);
    out.value = r.best_value;
    out.history = r.history;
    for (const auto& p : r.history_positions) out.history_gains.push_back(expand(p));
    return out;
}

std::vector<SweepEntry> robustness_sweep(const GainVector& best_gains, const Scenario& scenario,
                                         std::span<const double> scale_factors) {
    const ControllerGains gains = from_vector(best_gains, scenario.gains.u_ref);
    std::vector<SweepEntry> out;
    for (SweepKind kind : {SweepKind::magnitude, SweepKind::rate}) {
        for (double f : scale_factors) {
            const LoadProfile profile =
                kind == SweepKind::magnitude ? scenario.profile.scaled_magnitude(f) : scenario.profile.scaled_rate(f);
            const SimResult r = simulate(scenario.params, gains, profile, scenario.sim, scenario.band);
            out.push_back({kind, f, r.metrics});
        }
    }
    return out;
}

std::string to_string(SweepKind kind) { return kind == SweepKind::magnitude ? "magnitude" : "rate"; }

}  // namespace mpbuck
