#include "mpbuck/error.hpp"
#include "mpbuck/optimizer.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace mpbuck;

namespace {

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - 0.3) * (v - 0.3);
    return s;
}

PsoConfig sphere_config(std::uint64_t seed = 42) {
    PsoConfig c;
    c.swarm_size = 30;
    c.max_iterations = 200;
    c.seed = seed;
    c.x_min.assign(6, -1.0);
    c.x_max.assign(6, 1.0);
    c.threads = 1;
    return c;
}

Scenario small_scenario() {
    Scenario s;
    s.params.n_phases = 2;
    s.params.inductance = 20e-6;
    s.params.capacitance = 50e-6;
    s.params.r_winding = 0.02;
    s.params.r_esr = 0.01;
    s.params.u_source = 12.0;
    s.params.pwm_period = 5e-6;
    s.profile = LoadProfile({{0.0, 5.0, 0.0}, {50e-6, 5.0, -1e6}}, 2.5);
    s.sim.t_end = 200e-6;
    s.sim.steps_per_pwm_period = 16;
    s.sim.initial = InitialKind::warm;
    s.band = {3.0, 4.0, 1e-6};
    s.gains.u_ref = 3.3;
    s.gains.k_p = 1.0;
    s.gains.k_i = 1e3;
    return s;
}

}  // namespace

TEST_CASE("sphere function is minimized") {
    const auto r = pso_minimize(sphere, sphere_config());
    CHECK(r.best_value < 1e-6);
    REQUIRE(r.history.size() == 201);
    for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
    for (double x : r.best_position) CHECK(x == doctest::Approx(0.3).epsilon(1e-2));
}

TEST_CASE("identical seeds give identical runs, regardless of thread count") {
    const auto a = pso_minimize(sphere, sphere_config(7));
    const auto b = pso_minimize(sphere, sphere_config(7));
    CHECK(a.history == b.history);
    CHECK(a.best_position == b.best_position);

    auto threaded = sphere_config(7);
    threaded.threads = 4;
    const auto c = pso_minimize(sphere, threaded);
    CHECK(a.history == c.history);
    CHECK(a.best_position == c.best_position);

    const auto d = pso_minimize(sphere, sphere_config(8));
    CHECK(d.history != a.history);
}

TEST_CASE("a particle resting at the optimum stays there") {
    auto cfg = sphere_config();
    Particle p;
    p.position.assign(6, 0.3);
    p.velocity.assign(6, 0.0);
    Swarm swarm(cfg, {p});
    swarm.initialize(sphere);
    const double v0 = swarm.best_value();
    CHECK(v0 == 0.0);
    for (int k = 0; k < 50; ++k) {
        swarm.iterate(sphere);
        CHECK(swarm.best_value() == v0);
        CHECK(swarm.particles()[0].position == p.position);
    }
}

TEST_CASE("every evaluated position lies inside the box and personal bests are minimal") {
    PsoConfig cfg;
    cfg.swarm_size = 12;
    cfg.max_iterations = 60;
    cfg.seed = 3;
    cfg.x_min = {0.0, -5.0, 10.0};
    cfg.x_max = {1.0, 5.0, 11.0};
    cfg.threads = 1;
    std::atomic<bool> inside{true};
    // optimum outside the box drives particles onto its faces
    auto f = [&](std::span<const double> x) {
        for (std::size_t d = 0; d < 3; ++d)
            if (x[d] < cfg.x_min[d] || x[d] > cfg.x_max[d]) inside = false;
        return (x[0] + 3) * (x[0] + 3) + (x[1] - 9) * (x[1] - 9) + x[2] * x[2];
    };
    Swarm swarm(cfg);
    swarm.initialize(f);
    std::vector<double> seen_min(cfg.swarm_size, std::numeric_limits<double>::infinity());
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        swarm.iterate(f);
        for (std::size_t i = 0; i < cfg.swarm_size; ++i) {
            const auto& p = swarm.particles()[i];
            seen_min[i] = std::min(seen_min[i], p.current_value);
            CHECK(p.best_value <= p.current_value);
            CHECK(p.best_value <= seen_min[i]);
        }
    }
    CHECK(inside);
    CHECK(swarm.best_position()[0] == 0.0);
    CHECK(swarm.best_position()[1] == 5.0);
    CHECK(swarm.best_position()[2] == 10.0);
}

TEST_CASE("pso configuration is validated") {
    auto c = sphere_config();
    c.swarm_size = 1;
    CHECK_THROWS_AS(pso_minimize(sphere, c), ConfigError);
    c = sphere_config();
    c.x_max[2] = c.x_min[2];
    CHECK_THROWS_AS(pso_minimize(sphere, c), ConfigError);
    c = sphere_config();
    c.velocity_clamp_fraction = 0.0;
    CHECK_THROWS_AS(pso_minimize(sphere, c), ConfigError);
    c = sphere_config();
    c.x_max.pop_back();
    CHECK_THROWS_AS(pso_minimize(sphere, c), ConfigError);
}

TEST_CASE("objective examples") {
    SimMetrics m;
    m.outage = -0.02;
    m.error_stddev = 0.013;
    CHECK(objective_from_metrics(m, 1e-6) == doctest::Approx(0.013).epsilon(1e-15));

    m.outage = 0.05;
    m.error_stddev = 0.01;
    CHECK(objective_from_metrics(m, 1e-6) == doctest::Approx(std::log(0.050001) - std::log(1e-6) + 0.01).epsilon(1e-14));
    CHECK(objective_from_metrics(m, 1e-6) == doctest::Approx(10.8298).epsilon(1e-5));

    m.outage = -0.05;
    m.error_stddev = 0.0;
    CHECK(objective_from_metrics(m, 1e-6) == 0.0);

    m.diverged = true;
    CHECK(objective_from_metrics(m, 1e-6) == kDivergencePenalty);
}

TEST_CASE("objective is non-negative and the divergence penalty dominates") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> o(-10.0, 1e3), s(0.0, 1e3);
    for (int k = 0; k < 10000; ++k) {
        SimMetrics m;
        m.outage = o(rng);
        m.error_stddev = s(rng);
        const double f = objective_from_metrics(m, 1e-6);
        CHECK(f >= 0.0);
        CHECK(f < kDivergencePenalty);
    }
}

TEST_CASE("gain vector order and round trip") {
    ControllerGains g;
    g.k_p = 1;
    g.k_d = 2;
    g.k_dd = 3;
    g.k_i = 4;
    g.t_d = 5;
    g.t_dd = 6;
    g.u_ref = 7;
    const auto x = to_vector(g);
    CHECK(x == GainVector{1, 2, 3, 4, 5, 6});
    CHECK(from_vector(x, 7) == g);
    CHECK(std::string(kGainNames[2]) == "k_dd");
}

TEST_CASE("objective on a closed-loop scenario") {
    const auto s = small_scenario();
    const auto x = to_vector(s.gains);
    const auto r = simulate(s.params, s.gains, s.profile, s.sim, s.band);
    CHECK(objective(x, s) == objective_from_metrics(r.metrics, s.band.epsilon));
    CHECK(objective(x, s) >= 0.0);
}

TEST_CASE("robustness sweep covers magnitude and rate variants") {
    const auto s = small_scenario();
    const auto x = to_vector(s.gains);
    const std::vector<double> f{1.0, 0.5, 0.1};
    const auto sweep = robustness_sweep(x, s, f);
    REQUIRE(sweep.size() == 6);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(sweep[k].kind == SweepKind::magnitude);
        CHECK(sweep[k + 3].kind == SweepKind::rate);
        CHECK(sweep[k].factor == f[k]);
        CHECK(sweep[k + 3].factor == f[k]);
    }
    const auto direct = simulate(s.params, s.gains, s.profile, s.sim, s.band).metrics;
    for (std::size_t k : {0u, 3u}) {
        CHECK(sweep[k].metrics.outage == direct.outage);
        CHECK(sweep[k].metrics.error_stddev == direct.error_stddev);
    }
    CHECK(to_string(SweepKind::magnitude) == "magnitude");
    CHECK(to_string(SweepKind::rate) == "rate");
}

TEST_CASE("tuning respects a frozen derivative time constant") {
    const auto s = small_scenario();
    TuneConfig t;
    t.pso.swarm_size = 4;
    t.pso.max_iterations = 3;
    t.pso.seed = 5;
    t.pso.threads = 1;
    t.pso.x_min = {0.0, 0.0, 0.0, 0.0, 1e-6, 1e-6};
    t.pso.x_max = {2.0, 1e-5, 1e-11, 2e3, 1e-5, 1e-5};
    t.frozen_t_d = 3e-6;
    const auto r = tune(s, t);
    CHECK(r.gains.t_d == 3e-6);
    CHECK(r.gains.u_ref == s.gains.u_ref);
    REQUIRE(r.history.size() == 4);
    REQUIRE(r.history_gains.size() == 4);
    for (const auto& g : r.history_gains) CHECK(g[4] == 3e-6);
    for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
    CHECK(to_vector(r.gains) == r.history_gains.back());

    const auto again = tune(s, t);
    CHECK(again.gains == r.gains);

    t.pso.x_min[4] = 0.0;
    t.frozen_t_d.reset();
    CHECK_THROWS_AS(tune(s, t), ConfigError);
}
