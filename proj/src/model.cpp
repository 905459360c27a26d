// model.cpp: System/bath validation, deterministic eigenbases, overlaps and phases

#include "quapi/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quapi/errors.hpp"

namespace quapi {

namespace pauli {

Matrix identity() { return Matrix::Identity(2, 2); }

Matrix sigma_x() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}

Matrix sigma_y() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = Complex(0.0, -1.0);
    m(1, 0) = Complex(0.0, 1.0);
    return m;
}

Matrix sigma_z() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

} // namespace pauli

double hermiticity_defect(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double commutator_norm(const Matrix& a, const Matrix& b) {
    if (a.size() == 0) return 0.0;
    return (a * b - b * a).cwiseAbs().maxCoeff();
}

namespace {

void require_square(const Matrix& m, Index n, const char* name) {
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << name << ": expected " << n << "x" << n << " matrix, got " << m.rows() << "x" << m.cols();
        throw ValidationError(os.str());
    }
}

void require_hermitian(const Matrix& m, const char* name) {
    const double defect = hermiticity_defect(m);
    if (defect > kHermitianTolerance) {
        std::ostringstream os;
        os << name << ": not Hermitian (max |A - A^dagger| = " << defect << ")";
        throw ValidationError(os.str());
    }
}

} // namespace

void SystemSpec::validate() const {
    const Index n = hamiltonian.rows();
    if (n <= 0) throw ValidationError("system: dimension must be positive");
    require_square(hamiltonian, n, "hamiltonian");
    require_square(sigma1, n, "sigma1");
    require_square(sigma2, n, "sigma2");
    require_square(rho0, n, "rho0");
    require_hermitian(hamiltonian, "hamiltonian");
    require_hermitian(sigma1, "sigma1");
    require_hermitian(sigma2, "sigma2");
    require_hermitian(rho0, "rho0");

    const Complex trace = rho0.trace();
    if (std::abs(trace - 1.0) > kTraceTolerance) {
        std::ostringstream os;
        os << "rho0: trace must be 1 (got " << trace.real() << (trace.imag() >= 0 ? "+" : "") << trace.imag() << "i)";
        throw ValidationError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho0, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kPositivityTolerance) {
        std::ostringstream os;
        os << "rho0: not positive semidefinite (smallest eigenvalue " << solver.eigenvalues().minCoeff() << ")";
        throw ValidationError(os.str());
    }
}

SystemSpec two_level_system(double delta) {
    SystemSpec sys;
    sys.hamiltonian = 0.5 * delta * pauli::sigma_x();
    sys.sigma1 = pauli::sigma_x();
    sys.sigma2 = pauli::sigma_z();
    sys.rho0 = Matrix::Zero(2, 2);
    sys.rho0(0, 0) = 1.0;
    return sys;
}

// --------------------------- spectral densities -------------------------------

SpectralDensity::SpectralDensity(Ohmic o) : kind_(o) {
    if (!(o.gamma >= 0.0)) throw ValidationError("ohmic: gamma must be >= 0");
    if (!(o.omega_c > 0.0)) throw ValidationError("ohmic: omega_c must be > 0");
}

SpectralDensity::SpectralDensity(Tabulated t) : kind_(std::move(t)) {
    const auto& tab = std::get<Tabulated>(kind_);
    if (tab.omega.size() != tab.value.size() || tab.omega.size() < 2) {
        throw ValidationError("tabulated: need at least two (omega, value) samples of equal length");
    }
    for (std::size_t i = 0; i < tab.omega.size(); ++i) {
        if (!(tab.omega[i] > 0.0)) throw ValidationError("tabulated: sample frequencies must be > 0");
        if (!(tab.value[i] >= 0.0)) throw ValidationError("tabulated: G(omega) must be >= 0");
        if (i > 0 && !(tab.omega[i] > tab.omega[i - 1])) {
            throw ValidationError("tabulated: sample frequencies must be strictly increasing");
        }
    }
}

namespace {

double evaluate_positive(const Ohmic& o, double w) {
    return o.gamma / M_PI * w * std::exp(-w / o.omega_c);
}

// Linear interpolation; below the first sample the density is interpolated towards
// G(0) = 0, beyond the last sample it is zero.
double evaluate_positive(const Tabulated& t, double w) {
    if (w >= t.omega.back()) return w == t.omega.back() ? t.value.back() : 0.0;
    if (w <= t.omega.front()) return t.value.front() * w / t.omega.front();
    const auto it = std::upper_bound(t.omega.begin(), t.omega.end(), w);
    const std::size_t hi = static_cast<std::size_t>(it - t.omega.begin());
    const std::size_t lo = hi - 1;
    const double f = (w - t.omega[lo]) / (t.omega[hi] - t.omega[lo]);
    return (1.0 - f) * t.value[lo] + f * t.value[hi];
}

} // namespace

double SpectralDensity::operator()(double omega) const {
    const double w = std::abs(omega);
    const double g = std::visit([w](const auto& k) { return evaluate_positive(k, w); }, kind_);
    return omega < 0.0 ? -g : g;
}

double SpectralDensity::cutoff_scale() const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return o->omega_c;
    return std::get<Tabulated>(kind_).omega.back();
}

double SpectralDensity::integration_limit(double cutoff_multiple) const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return cutoff_multiple * o->omega_c;
    return std::get<Tabulated>(kind_).omega.back();
}

bool SpectralDensity::is_zero() const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return o->gamma == 0.0;
    const auto& t = std::get<Tabulated>(kind_);
    return std::all_of(t.value.begin(), t.value.end(), [](double v) { return v == 0.0; });
}

SpectralDensity SpectralDensity::scaled(double factor) const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return Ohmic{o->gamma * factor, o->omega_c};
    Tabulated t = std::get<Tabulated>(kind_);
    for (double& v : t.value) v *= factor;
    return t;
}

// --------------------------- eigenbases ---------------------------------------

Matrix CouplingBasis::reconstruct() const {
    return vectors * eigenvalues.cast<Complex>().asDiagonal() * vectors.adjoint();
}

namespace {

constexpr double kDegeneracyTolerance = 1e-10;
constexpr double kPivotTieTolerance = 1e-12;

// Orthonormal basis of span(block) built from projected unit vectors, choosing at
// each stage the unit vector with the largest residual (lowest index on ties).
Matrix canonical_span(const Matrix& block) {
    const Index n = block.rows();
    const Index m = block.cols();
    if (m == 1) return block;
    const Matrix projector = block * block.adjoint();
    Matrix chosen(n, m);
    for (Index c = 0; c < m; ++c) {
        Index best = -1;
        double best_norm = -1.0;
        Vector best_residual;
        for (Index i = 0; i < n; ++i) {
            Vector r = projector.col(i);
            for (Index k = 0; k < c; ++k) r -= chosen.col(k) * chosen.col(k).dot(r);
            const double nr = r.norm();
            if (nr > best_norm + kPivotTieTolerance) {
                best = i;
                best_norm = nr;
                best_residual = r;
            }
        }
        (void)best;
        chosen.col(c) = best_residual / best_norm;
    }
    return chosen;
}

void fix_phases(Matrix& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        const double mx = vectors.col(c).cwiseAbs().maxCoeff();
        Index pivot = 0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            if (std::abs(vectors(i, c)) >= mx - kPivotTieTolerance) {
                pivot = i;
                break;
            }
        }
        const Complex v = vectors(pivot, c);
        vectors.col(c) *= std::conj(v) / std::abs(v);
        vectors(pivot, c) = std::abs(vectors(pivot, c));
    }
}

// Splits a descending eigenvalue list into [begin, end) clusters.
std::vector<std::pair<Index, Index>> clusters(const RealVector& values) {
    std::vector<std::pair<Index, Index>> out;
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    Index start = 0;
    for (Index i = 1; i <= values.size(); ++i) {
        if (i == values.size() || values(start) - values(i) > kDegeneracyTolerance * scale) {
            out.emplace_back(start, i);
            start = i;
        }
    }
    return out;
}

// Descending eigen-decomposition of a Hermitian matrix.
std::pair<RealVector, Matrix> descending_eigensystem(const Matrix& op) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(op);
    if (solver.info() != Eigen::Success) throw ValidationError("eigenbasis: decomposition failed");
    const Index n = op.rows();
    RealVector values(n);
    Matrix vectors(n, n);
    for (Index i = 0; i < n; ++i) {
        values(i) = solver.eigenvalues()(n - 1 - i);
        vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return {values, vectors};
}

CouplingBasis build_basis(const Matrix& op, const Matrix* secondary) {
    if (op.rows() != op.cols() || op.rows() == 0) throw ValidationError("eigenbasis: operator must be square and non-empty");
    require_hermitian(op, "eigenbasis");
    if (secondary) {
        if (secondary->rows() != op.rows() || secondary->cols() != op.cols()) {
            throw ValidationError("eigenbasis: secondary operator dimension mismatch");
        }
        require_hermitian(*secondary, "eigenbasis (secondary)");
    }

    auto [values, vectors] = descending_eigensystem(op);
    for (auto [b, e] : clusters(values)) {
        const Index m = e - b;
        if (m == 1) continue;
        Matrix block = vectors.middleCols(b, m);
        if (secondary) {
            const Matrix restricted = block.adjoint() * (*secondary) * block;
            auto [sub_values, sub_vectors] = descending_eigensystem(0.5 * (restricted + restricted.adjoint()));
            block = block * sub_vectors;
            for (auto [sb, se] : clusters(sub_values)) {
                if (se - sb > 1) block.middleCols(sb, se - sb) = canonical_span(block.middleCols(sb, se - sb));
            }
        } else {
            block = canonical_span(block);
        }
        vectors.middleCols(b, m) = block;
        // The cluster shares one eigenvalue to within tolerance; use the mean.
        values.segment(b, m).setConstant(values.segment(b, m).mean());
    }
    fix_phases(vectors);
    return CouplingBasis{values, vectors};
}

} // namespace

CouplingBasis eigenbasis(const Matrix& op) { return build_basis(op, nullptr); }

CouplingBasis eigenbasis(const Matrix& op, const Matrix& secondary) { return build_basis(op, &secondary); }

Matrix overlap_matrix(const CouplingBasis& a, const CouplingBasis& b) {
    if (a.dimension() != b.dimension()) throw ValidationError("overlap_matrix: dimension mismatch");
    return a.vectors.adjoint() * b.vectors;
}

DephasingCheck validate_dephasing_condition(const SystemSpec& sys) {
    return DephasingCheck{commutator_norm(sys.sigma1, sys.hamiltonian)};
}

void require_dephasing_condition(const SystemSpec& sys) {
    const auto check = validate_dephasing_condition(sys);
    if (!check.ok()) {
        std::ostringstream os;
        os << "dephasing condition violated: max |[sigma1, H_S]| = " << check.commutator_norm
           << " exceeds " << kCommutatorTolerance;
        throw DephasingConditionError(os.str(), check.commutator_norm);
    }
}

Matrix unitary_step(const Matrix& hamiltonian, double dt) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian);
    const Vector phases = (solver.eigenvalues().cast<Complex>() * Complex(0.0, -dt)).array().exp();
    return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

Vector system_phase_step(const SystemSpec& sys, const CouplingBasis& basis1, double dt) {
    require_dephasing_condition(sys);
    if (basis1.dimension() != sys.dimension()) throw ValidationError("system_phase_step: basis dimension mismatch");
    const Matrix u = unitary_step(sys.hamiltonian, dt);
    return (basis1.vectors.adjoint() * u * basis1.vectors).diagonal();
}

} // namespace quapi
