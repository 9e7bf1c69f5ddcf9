#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpbuck {

/// Classical fourth-order Runge-Kutta step with reusable scratch storage.
/// `rhs(t, y, dydt)` must write the derivative of `y` at time `t`.
class Rk4Stepper {
public:
    explicit Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

    template <class Rhs>
    void step(Rhs&& rhs, double t, std::span<double> y, double dt) {
        const std::size_t n = y.size();
        rhs(t, std::span<const double>(y), std::span<double>(k1_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * dt * k1_[i];
        rhs(t + 0.5 * dt, std::span<const double>(tmp_), std::span<double>(k2_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * dt * k2_[i];
        rhs(t + 0.5 * dt, std::span<const double>(tmp_), std::span<double>(k3_));
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + dt * k3_[i];
        rhs(t + dt, std::span<const double>(tmp_), std::span<double>(k4_));
        for (std::size_t i = 0; i < n; ++i) y[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace mpbuck
