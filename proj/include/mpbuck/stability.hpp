#pragma once

// Averaged two-state model in (total inductor current, voltage error) and
// its Routh-Hurwitz screen, with a closed-form eigenvalue cross-check.

#include "mpbuck/converter.hpp"

#include <complex>
#include <optional>

namespace mpbuck {

/// State matrix [[b1, g1], [-coupling, g_diag]].
struct ReducedModel {
    double b1 = 0.0;        ///< -R_L/L [1/s]
    double g1 = 0.0;        ///< N/L [1/(ohm s)]
    double coupling = 0.0;  ///< 1/(rC) - R_C R_L/(r L); enters the matrix negated
    double g_diag = 0.0;    ///< -(1/(r C R_load) + R_C N_f/(r L)) [1/s]
    double r_factor = 1.0;
    double n_f = 1.0;

    ReducedModel scaled(double k) const;
};

struct StabilityReport {
    double trace = 0.0;        ///< b1 + g_diag; also the linear coefficient as printed, with opposite sign convention
    double determinant = 0.0;  ///< b1 g_diag + coupling g1
    bool routh_hurwitz_stable = false;
    std::complex<double> eigenvalue_1;
    std::complex<double> eigenvalue_2;
    bool eigen_stable = false;
    bool agreement = false;
};

/// `r_factor` and `n_f` default to 1 + R_C/R_load and N.
ReducedModel build_reduced_model(const ConverterParams& params, double r_load,
                                 std::optional<double> r_factor = std::nullopt,
                                 std::optional<double> n_f = std::nullopt);

/// Hurwitz test for the 2x2 state matrix: trace < 0 and det > 0.
StabilityReport routh_hurwitz(const ReducedModel& model);

}  // namespace mpbuck
