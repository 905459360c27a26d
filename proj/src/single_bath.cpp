// single_bath.cpp: Standard one-bath QUAPI with half-step-terminated coefficients
//
// Slices live in the eigenbasis of the coupling operator, n^2 forward/backward pairs
// per slice; the full system propagator connects neighbouring slices. Kept separate
// from the two-bath engine so the two can cross-check each other.

#include <sstream>

#include "quapi/errors.hpp"
#include "quapi/propagator.hpp"

namespace quapi {

namespace {

class SingleBathModel {
public:
    SingleBathModel(const Matrix& hamiltonian, const Matrix& coupling, const Matrix& rho0, double dt)
        : basis_(eigenbasis(coupling)), n_(static_cast<int>(coupling.rows())) {
        const Matrix u = basis_.vectors.adjoint() * unitary_step(hamiltonian, dt) * basis_.vectors;
        rho0_ = basis_.vectors.adjoint() * rho0 * basis_.vectors;
        const int P = pairs();
        step_.resize(static_cast<std::size_t>(P * P));
        for (int next = 0; next < P; ++next)
            for (int prev = 0; prev < P; ++prev)
                step_[static_cast<std::size_t>(next * P + prev)] =
                    u(next / n_, prev / n_) * std::conj(u(next % n_, prev % n_));
    }

    int pairs() const { return n_ * n_; }
    const CouplingBasis& basis() const { return basis_; }

    Complex initial(int s) const { return rho0_(s / n_, s % n_); }
    Complex step(int next, int prev) const { return step_[static_cast<std::size_t>(next * pairs() + prev)]; }

    // table[later * P + earlier]
    std::vector<Complex> influence_table(Complex eta) const {
        const int P = pairs();
        const auto& l = basis_.eigenvalues;
        std::vector<Complex> t(static_cast<std::size_t>(P * P));
        for (int a = 0; a < P; ++a)
            for (int e = 0; e < P; ++e)
                t[static_cast<std::size_t>(a * P + e)] = pair_influence(eta, l(a / n_), l(a % n_), l(e / n_), l(e % n_));
        return t;
    }

private:
    CouplingBasis basis_;
    int n_;
    Matrix rho0_;
    std::vector<Complex> step_;
};

// eta(j, j') of a half-step-terminated table whose last slice is N.
Complex eta_at(const EtaTable& t, int n_final, int j, int jp) {
    if (j == n_final) {
        if (j == jp) return t.end_diagonal();
        if (jp == 0) return t.corner();
        return t.last_row(n_final - jp);
    }
    if (j == jp) return j == 0 ? t.end_diagonal() : t.separation(0);
    if (jp == 0) return t.first_column(j);
    return t.separation(j - jp);
}

std::size_t power(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

// Visits every digit string d[0..count) over `base` in lexicographic order together
// with prod_i factor(i, d), where factor(i, d) may read d[0..i]. Prefix products are
// recomputed only from the first changed digit.
template <class Factor, class Visit>
void enumerate(int count, int base, Factor factor, Visit visit) {
    std::vector<int> d(static_cast<std::size_t>(count), 0);
    std::vector<Complex> prefix(static_cast<std::size_t>(count));
    auto refresh = [&](int from) {
        for (int i = from; i < count; ++i) {
            const Complex before = i == 0 ? Complex(1.0) : prefix[static_cast<std::size_t>(i - 1)];
            prefix[static_cast<std::size_t>(i)] = before * factor(i, d);
        }
    };
    refresh(0);
    for (;;) {
        visit(d, prefix.back());
        int i = count - 1;
        while (i >= 0 && ++d[static_cast<std::size_t>(i)] == base) d[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) return;
        refresh(i);
    }
}

// Full path sum over slices 0..N with a table built for N. Digit i is slice i.
Matrix direct_sum(const SingleBathModel& m, const EtaTable& eta, int n_final, int n) {
    const int P = m.pairs();
    std::vector<std::vector<std::vector<Complex>>> tables(static_cast<std::size_t>(n_final + 1));
    for (int j = 0; j <= n_final; ++j)
        for (int jp = 0; jp <= j; ++jp) tables[static_cast<std::size_t>(j)].push_back(m.influence_table(eta_at(eta, n_final, j, jp)));

    Matrix rho = Matrix::Zero(n, n);
    auto factor = [&](int j, const std::vector<int>& d) {
        const int s = d[static_cast<std::size_t>(j)];
        Complex w = j == 0 ? m.initial(s) : m.step(s, d[static_cast<std::size_t>(j - 1)]);
        const auto& row = tables[static_cast<std::size_t>(j)];
        for (int jp = 0; jp <= j; ++jp) w *= row[static_cast<std::size_t>(jp)][static_cast<std::size_t>(s * P + d[static_cast<std::size_t>(jp)])];
        return w;
    };
    enumerate(n_final + 1, P, factor, [&](const std::vector<int>& d, Complex w) {
        const int f = d.back();
        rho(f / n, f % n) += w;
    });
    return rho;
}

} // namespace

Trajectory evolve_single_bath(const Matrix& hamiltonian, const Matrix& coupling, const Matrix& rho0,
                              const ThermalBath& bath, const RunParameters& params) {
    params.validate();
    bath.validate();
    const Index nn = hamiltonian.rows();
    if (nn < 1 || hamiltonian.cols() != nn || coupling.rows() != nn || coupling.cols() != nn || rho0.rows() != nn ||
        rho0.cols() != nn) {
        throw ValidationError("single-bath engine: operator shapes differ");
    }
    if (hermiticity_defect(hamiltonian) > kHermitianTolerance || hermiticity_defect(coupling) > kHermitianTolerance) {
        throw ValidationError("single-bath engine: Hamiltonian and coupling must be Hermitian");
    }
    const int n = static_cast<int>(nn);
    const int memory = params.memory;
    const int P = n * n;
    const double tensor_bytes = static_cast<double>(power(P, memory + 1)) * sizeof(Complex);
    if (tensor_bytes > static_cast<double>(params.memory_limit_bytes)) {
        std::ostringstream os;
        os << "single-bath run needs " << tensor_bytes << " bytes, above the limit of " << params.memory_limit_bytes;
        throw ResourceLimitError(os.str());
    }

    const double dt = params.dt;
    const int n_total = params.total_steps();
    const SingleBathModel model(hamiltonian, coupling, rho0, dt);
    const Matrix& v = model.basis().vectors;

    Trajectory traj;
    traj.meta.engine = EngineKind::SingleBath;
    traj.meta.dt = dt;
    traj.meta.memory = memory;
    traj.push(0.0, rho0);

    const int short_end = std::min(memory, n_total);
    for (int j = 1; j <= short_end; ++j) {
        if (j % params.stride != 0) continue;
        const EtaTable eta = eta_table_full(bath, dt, j, params.quadrature, -1, params.exec.workers);
        traj.push(j * dt, v * direct_sum(model, eta, j, n) * v.adjoint());
    }
    if (n_total <= memory) return traj;

    const EtaTable eta =
        eta_table_full(bath, dt, std::max(n_total, memory + 2), params.quadrature, memory, params.exec.workers);
    const int long_index = eta.last_index();

    // Pair tables for a retiring slice against partners 0..memory slices later:
    // [0] while slice 0 retires (half-step boundary entries), [1] afterwards.
    std::vector<std::vector<Complex>> retire[2];
    for (int k = 0; k <= memory; ++k) {
        retire[0].push_back(model.influence_table(eta_at(eta, long_index, k, 0)));
        retire[1].push_back(model.influence_table(eta.separation(k)));
    }
    std::vector<std::vector<Complex>> terminal(static_cast<std::size_t>(memory + 1));
    for (int k = 1; k <= memory; ++k) terminal[static_cast<std::size_t>(k)] = model.influence_table(eta.last_row(k));
    const auto end_diag = model.influence_table(eta.end_diagonal());
    auto at = [](const std::vector<Complex>& t, int P_, int later, int earlier) {
        return t[static_cast<std::size_t>(later * P_ + earlier)];
    };

    // A over slices j .. j+memory-1, oldest slice on the slowest axis.
    const std::size_t size = power(P, memory);
    std::vector<Complex> a(size), next(size);
    for (std::size_t flat = 0; flat < size; ++flat) a[flat] = model.initial(static_cast<int>(flat / (size / static_cast<std::size_t>(P))));

    for (int j = 0;; ++j) {
        const int n_final = j + memory;
        if (j >= 1 && n_final % params.stride == 0) {
            // Digits: d[0] = f (slice N), d[1 + i] = slice j + i.
            const auto& inner = retire[1];
            auto factor = [&](int i, const std::vector<int>& d) {
                if (i == 0) return at(end_diag, P, d[0], d[0]);
                const int s = d[static_cast<std::size_t>(i)];
                const int slice = i - 1;
                Complex w = at(terminal[static_cast<std::size_t>(memory - slice)], P, d[0], s);
                for (int ip = 1; ip <= i; ++ip) w *= at(inner[static_cast<std::size_t>(i - ip)], P, s, d[static_cast<std::size_t>(ip)]);
                if (slice > 0) w *= model.step(s, d[static_cast<std::size_t>(i - 1)]);
                if (slice == memory - 1) w *= model.step(d[0], s);
                return w;
            };
            Matrix rho = Matrix::Zero(n, n);
            enumerate(memory + 1, P, factor, [&](const std::vector<int>& d, Complex w) {
                std::size_t flat = 0;
                for (int i = 1; i <= memory; ++i) flat = flat * static_cast<std::size_t>(P) + static_cast<std::size_t>(d[static_cast<std::size_t>(i)]);
                rho(d[0] / n, d[0] % n) += w * a[flat];
            });
            traj.push(n_final * dt, v * rho * v.adjoint());
        }
        if (n_final >= n_total) break;

        // Digits: d[0] = retiring slice j, d[k] = slice j + k (k = memory is the new one).
        const auto& tables = retire[j == 0 ? 0 : 1];
        auto factor = [&](int k, const std::vector<int>& d) {
            const int s = d[0];
            Complex w = at(tables[static_cast<std::size_t>(k)], P, d[static_cast<std::size_t>(k)], s);
            if (k == 1) w *= model.step(d[1], s);
            return w;
        };
        std::fill(next.begin(), next.end(), Complex(0.0));
        std::size_t leaf = 0; // lexicographic position of d[0..memory]
        enumerate(memory + 1, P, factor, [&](const std::vector<int>&, Complex w) {
            const Complex amp = a[leaf / static_cast<std::size_t>(P)];
            if (amp != Complex(0.0)) next[leaf % size] += amp * w;
            ++leaf;
        });
        a.swap(next);
    }
    return traj;
}

} // namespace quapi
