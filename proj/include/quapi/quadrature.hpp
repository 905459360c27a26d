// quadrature.hpp: Adaptive panel Gauss-Legendre integration of complex integrands

#pragma once

#include <complex>
#include <functional>

namespace quapi {

struct QuadratureConfig {
    double relative_tolerance{1e-10};
    double absolute_tolerance{1e-14};
    double omega_max_multiple{40.0}; // upper limit as a multiple of the bath cutoff

    void validate() const;
};

struct QuadratureResult {
    std::complex<double> value;
    double error_estimate{0.0};
    long evaluations{0};
};

// Integrates f over [a, b]. The interval is first cut into base panels no wider than
// `max_panel`; each panel is bisected until the 20-point Gauss-Legendre estimate agrees
// with the sum over its halves to within its share of max(abs_tol, rel_tol * |I|).
// Throws NumericalError if the tolerance cannot be met.
QuadratureResult integrate_adaptive(const std::function<std::complex<double>(double)>& f,
                                    double a, double b, double max_panel,
                                    const QuadratureConfig& cfg);

} // namespace quapi
