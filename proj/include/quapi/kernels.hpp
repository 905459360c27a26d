// kernels.hpp: Thermal spectral weight, discrete influence coefficients (eta tables)
// and the pairwise influence factor.
//
// Coefficients are double integrals of the bath correlation function
//     C(tau) = int_0^inf dw G(w) [coth(beta w / 2) cos(w tau) - i sin(w tau)]
// over pairs of time slices, evaluated in folded form on (0, w_max].

#pragma once

#include <iosfwd>
#include <vector>

#include "quapi/model.hpp"
#include "quapi/quadrature.hpp"

namespace quapi {

struct ThermalBath {
    SpectralDensity spectral;
    double temperature{1.0};

    double beta() const { return 1.0 / temperature; }
    void validate() const;
};

// F(w) = G(w) exp(beta w / 2) / (w^2 sinh(beta w / 2)), G extended oddly to w < 0.
// Throws ValidationError at w = 0.
double thermal_weight(const ThermalBath& bath, double omega);

enum class EtaPattern {
    HalfStepTerminated, // slices 0 and N are half steps (bath on the symmetric split)
    Uniform,            // all slices are full steps
};

const char* to_string(EtaPattern p);

// Influence coefficients eta(j, j') for 0 <= j' <= j <= last_index().
//
// HalfStepTerminated with N = last_index():
//   eta(j, j') interior (0 < j' <= j < N) depends only on j - j'
//   eta(j, 0)  first column, 0 < j < N
//   eta(N, j)  last row, 0 < j < N, depends only on N - j
//   eta(N, 0)  corner
//   eta(0, 0) = eta(N, N) end diagonal (half-step self correlation)
// Uniform with M = last_index(): eta(j, j') depends only on j - j'.
//
// A table may be truncated to separations <= max_separation(); entries beyond it are
// not computed and must not be requested.
class EtaTable {
public:
    EtaPattern pattern() const { return pattern_; }
    int last_index() const { return last_; }
    double dt() const { return dt_; }
    int max_separation() const { return max_sep_; }

    bool has(int j, int jp) const;
    Complex operator()(int j, int jp) const;

    // Structured access used by the propagators.
    Complex separation(int k) const;   // interior / uniform entry at separation k >= 0
    Complex first_column(int j) const; // eta(j, 0), 0 < j < N
    Complex last_row(int k) const;     // eta(N, N - k), 0 < k < N
    Complex corner() const;            // eta(N, 0)
    Complex end_diagonal() const;      // eta(0, 0) = eta(N, N)

    friend EtaTable eta_table_full(const ThermalBath&, double, int, const QuadratureConfig&, int, int);
    friend EtaTable eta_table_uniform(const ThermalBath&, double, int, const QuadratureConfig&, int, int);

private:
    EtaPattern pattern_{EtaPattern::Uniform};
    int last_{0};
    double dt_{0.0};
    int max_sep_{0};
    std::vector<Complex> interior_;     // [k], k = separation; [0] is the diagonal
    std::vector<Complex> first_column_; // [j], j >= 1
    std::vector<Complex> last_row_;     // [k], k >= 1
    Complex corner_{0.0};
    Complex end_diagonal_{0.0};
    bool has_corner_{false};

    [[noreturn]] void missing(int j, int jp) const;
};

// Half-step-terminated table for N slices of length dt. max_separation < 0 means
// "all separations". `workers` > 1 evaluates entries concurrently; results do not
// depend on the worker count.
EtaTable eta_table_full(const ThermalBath& bath, double dt, int n_slices, const QuadratureConfig& q = {},
                        int max_separation = -1, int workers = 1);

// Uniform table with entries for 0 <= j' <= j <= last_index.
EtaTable eta_table_uniform(const ThermalBath& bath, double dt, int last_index, const QuadratureConfig& q = {},
                           int max_separation = -1, int workers = 1);

// exp[-(l+ - l-)(eta e+ - conj(eta) e-)]; exactly 1 when l+ == l-.
Complex pair_influence(Complex eta, double later_plus, double later_minus, double earlier_plus,
                       double earlier_minus);

// CSV dump: pattern,j,jprime,re,im with 17 significant digits.
void write_eta_csv(std::ostream& os, const EtaTable& table);

// --- Building blocks shared with the analysis module ---

// int_0^wmax dw G(w)/w^2 * A(w) [coth(beta w/2) cos(w tau) - i sin(w tau)], with
// A(w) = 4 sin(w a) sin(w b).
Complex correlation_integral(const ThermalBath& bath, double a, double b, double tau, const QuadratureConfig& q);

// Self-correlation of one slice of length h:
// int_0^wmax dw G(w)/w^2 [2 coth(beta w/2) sin^2(w h/2) + i sin(w h)].
Complex self_correlation_integral(const ThermalBath& bath, double h, const QuadratureConfig& q);

// int_0^wmax dw G(w)/w^2 coth(beta w/2) (1 - cos(w t)).
double dephasing_exponent_integral(const ThermalBath& bath, double t, const QuadratureConfig& q);

} // namespace quapi
