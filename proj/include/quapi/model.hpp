// model.hpp: System/bath descriptions, coupling eigenbases and per-step system phases
//
// Conventions: hbar = k_B = 1. Energies and frequencies are measured in units of a
// reference splitting Delta, times in 1/Delta.

#pragma once

#include <complex>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace quapi {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-12;
inline constexpr double kPositivityTolerance = 1e-10;
inline constexpr double kCommutatorTolerance = 1e-10;

namespace pauli {
Matrix identity();
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();
} // namespace pauli

// Max-norm of A - A^dagger.
double hermiticity_defect(const Matrix& a);
// Max-norm of [a, b].
double commutator_norm(const Matrix& a, const Matrix& b);

struct SystemSpec {
    Matrix hamiltonian;
    Matrix sigma1; // pure-dephasing coupling, must commute with the Hamiltonian
    Matrix sigma2; // second coupling, arbitrary Hermitian
    Matrix rho0;

    Index dimension() const { return hamiltonian.rows(); }

    // Checks shapes, Hermiticity, and that rho0 is a density matrix.
    // Does not check the dephasing condition.
    void validate() const;
};

// Two-level system H_S = (delta/2) sigma_x, bath 1 on sigma_x, bath 2 on sigma_z,
// initial state |up_z> (P_z(0) = 1).
SystemSpec two_level_system(double delta = 1.0);

struct Ohmic {
    double gamma{0.0};
    double omega_c{1.0};
};

struct Tabulated {
    std::vector<double> omega;
    std::vector<double> value;
};

// Bath spectral density G(omega). Evaluation at negative frequency uses the odd
// extension G(-w) = -G(w).
class SpectralDensity {
public:
    SpectralDensity() = default;
    SpectralDensity(Ohmic o);
    SpectralDensity(Tabulated t);

    double operator()(double omega) const;

    // Scale at which the density is effectively exhausted (cutoff or last sample).
    double cutoff_scale() const;
    // Upper integration limit: a multiple of the cutoff for Ohmic, the last sample
    // for tabulated data.
    double integration_limit(double cutoff_multiple) const;

    bool is_zero() const;
    SpectralDensity scaled(double factor) const;

    const std::variant<Ohmic, Tabulated>& kind() const { return kind_; }

private:
    std::variant<Ohmic, Tabulated> kind_{Ohmic{}};
};

// Slot the bath attaches to: 1 -> sigma1, 2 -> sigma2.
struct BathSpec {
    SpectralDensity spectral;
    int slot{1};
};

struct CouplingBasis {
    RealVector eigenvalues; // descending
    Matrix vectors;         // columns are eigenvectors

    Index dimension() const { return eigenvalues.size(); }
    Matrix reconstruct() const;
};

// Deterministic eigendecomposition of a Hermitian operator. Eigenvalues are sorted
// descending; degenerate clusters are re-orthonormalized from projected unit vectors
// taken in order of largest pivot; each vector's first largest-magnitude component is
// made real positive.
CouplingBasis eigenbasis(const Matrix& op);

// As above, but degenerate clusters of `op` are resolved by diagonalizing the
// commuting operator `secondary` inside each cluster (joint eigenbasis).
CouplingBasis eigenbasis(const Matrix& op, const Matrix& secondary);

// Entry (i, j) = <a_i | b_j>.
Matrix overlap_matrix(const CouplingBasis& a, const CouplingBasis& b);

struct DephasingCheck {
    double commutator_norm{0.0};
    bool ok() const { return commutator_norm <= kCommutatorTolerance; }
};

DephasingCheck validate_dephasing_condition(const SystemSpec& sys);
// Throws DephasingConditionError if the check fails.
void require_dephasing_condition(const SystemSpec& sys);

// Entry k = <sigma1_k| exp(-i H_S dt) |sigma1_k>.
Vector system_phase_step(const SystemSpec& sys, const CouplingBasis& basis1, double dt);

// Exact unitary step exp(-i H dt) via the Hermitian eigendecomposition.
Matrix unitary_step(const Matrix& hamiltonian, double dt);

} // namespace quapi
