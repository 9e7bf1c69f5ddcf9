#include "mpbuck/stability.hpp"

#include "mpbuck/error.hpp"

#include <algorithm>
#include <cmath>

namespace mpbuck {

ReducedModel ReducedModel::scaled(double k) const {
    ReducedModel m = *this;
    m.b1 *= k;
    m.g1 *= k;
    m.coupling *= k;
    m.g_diag *= k;
    return m;
}

ReducedModel build_reduced_model(const ConverterParams& params, double r_load, std::optional<double> r_factor,
                                 std::optional<double> n_f) {
    if (!(r_load > 0.0)) throw ConfigError("build_reduced_model: r_load > 0 required");
    const double l = params.inductance;
    const double c = params.capacitance;
    ReducedModel m;
    m.r_factor = r_factor.value_or(1.0 + params.r_esr / r_load);
    m.n_f = n_f.value_or(static_cast<double>(params.n_phases));
    m.b1 = -params.r_winding / l;
    m.g1 = static_cast<double>(params.n_phases) / l;
    m.coupling = 1.0 / (m.r_factor * c) - params.r_esr * params.r_winding / (m.r_factor * l);
    m.g_diag = -(1.0 / (m.r_factor * c * r_load) + params.r_esr * m.n_f / (m.r_factor * l));
    return m;
}

StabilityReport routh_hurwitz(const ReducedModel& model) {
    StabilityReport rep;
    rep.trace = model.b1 + model.g_diag;
    rep.determinant = model.b1 * model.g_diag + model.coupling * model.g1;
    rep.routh_hurwitz_stable = rep.trace < 0.0 && rep.determinant > 0.0;

    // roots of lambda^2 + b lambda + c with b = -trace, c = det; the real-root
    // branch avoids cancellation by taking the small root as c / q
    const double b = -rep.trace;
    const double c = rep.determinant;
    const double disc = b * b - 4.0 * c;
    if (disc >= 0.0) {
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        rep.eigenvalue_1 = {q, 0.0};
        rep.eigenvalue_2 = {q != 0.0 ? c / q : 0.0, 0.0};
    } else {
        const double im = 0.5 * std::sqrt(-disc);
        rep.eigenvalue_1 = {-0.5 * b, im};
        rep.eigenvalue_2 = {-0.5 * b, -im};
    }
    rep.eigen_stable = std::max(rep.eigenvalue_1.real(), rep.eigenvalue_2.real()) < 0.0;
    rep.agreement = rep.routh_hurwitz_stable == rep.eigen_stable;
    return rep;
}

}  // namespace mpbuck
