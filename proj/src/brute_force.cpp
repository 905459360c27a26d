// brute_force.cpp: Direct sum over all discrete two-bath paths

#include <cmath>
#include <sstream>

#include "quapi/errors.hpp"
#include "quapi/propagator.hpp"

namespace quapi {

namespace {

// Influence exponent of one pair, summed before a single exp at the leaf.
Complex exponent(Complex eta, double lp, double lm, double ep, double em) {
    return -(lp - lm) * (eta * ep - std::conj(eta) * em);
}

struct PathSum {
    int n{2};
    int total{1}; // N
    int cutoff{-1};
    RealVector l1, l2;
    Matrix rho0;  // sigma2 eigenbasis
    const KTable* k{nullptr};
    const EtaTable* eta1{nullptr};
    const EtaTable* eta2{nullptr};

    std::vector<int> path;
    Matrix result;

    bool keep(int sep) const { return cutoff < 0 || sep <= cutoff; }

    int p1(int s) const { return s / (n * n); }
    int p2(int s) const { return s % (n * n); }
    double lam1(int pair, bool plus) const { return l1(plus ? pair / n : pair % n); }
    double lam2(int pair, bool plus) const { return l2(plus ? pair / n : pair % n); }

    // Exponent contributions of slice j (bath 1 and bath 2) with slices 0..j.
    Complex slice_terms(int j, int s) const {
        Complex acc = 0.0;
        const int a1 = p1(s), a2 = p2(s);
        for (int i = 0; i <= j; ++i) {
            if (!keep(j - i)) continue;
            const int e = i == j ? s : path[static_cast<std::size_t>(i)];
            const int e1 = p1(e), e2 = p2(e);
            acc += exponent((*eta1)(j - i, 0), lam1(a1, true), lam1(a1, false), lam1(e1, true), lam1(e1, false));
            acc += exponent((*eta2)(j, i), lam2(a2, true), lam2(a2, false), lam2(e2, true), lam2(e2, false));
        }
        return acc;
    }

    Complex terminal_terms(int f) const {
        Complex acc = 0.0;
        for (int i = 0; i <= total; ++i) {
            if (!keep(total - i)) continue;
            const int e2 = i == total ? f : p2(path[static_cast<std::size_t>(i)]);
            acc += exponent((*eta2)(total, i), lam2(f, true), lam2(f, false), lam2(e2, true), lam2(e2, false));
        }
        return acc;
    }

    void descend(int j, Complex amplitude, Complex expo) {
        const int S = n * n * n * n;
        const int P = n * n;
        if (j == total) {
            const int last = path[static_cast<std::size_t>(total - 1)];
            for (int f = 0; f < P; ++f) {
                const Complex kv = (*k)(last, f);
                if (kv == Complex(0.0)) continue;
                result(f / n, f % n) += amplitude * kv * std::exp(expo + terminal_terms(f));
            }
            return;
        }
        for (int s = 0; s < S; ++s) {
            Complex amp = amplitude;
            if (j == 0) {
                amp = rho0(p2(s) / n, p2(s) % n);
            } else {
                amp *= (*k)(path[static_cast<std::size_t>(j - 1)], p2(s));
            }
            if (amp == Complex(0.0)) continue;
            path[static_cast<std::size_t>(j)] = s;
            descend(j + 1, amp, expo + slice_terms(j, s));
        }
    }
};

} // namespace

Trajectory brute_force(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2, double dt,
                       int n_total, const QuadratureConfig& q, int memory_cutoff) {
    sys.validate();
    require_dephasing_condition(sys);
    bath1.validate();
    bath2.validate();
    if (!(dt > 0.0)) throw ValidationError("brute_force: dt must be > 0");
    if (n_total < 1) throw ValidationError("brute_force: need at least one step");
    const int n = static_cast<int>(sys.dimension());
    const double paths = std::pow(static_cast<double>(n), 4.0 * n_total);
    if (paths > kBruteForcePathCap) {
        std::ostringstream os;
        os << "brute force over " << n_total << " steps needs n^(4N) = " << paths << " paths, cap is "
           << kBruteForcePathCap;
        throw ResourceLimitError(os.str());
    }

    const CouplingFrame frame = coupling_frame(sys);
    const KTable k = build_k_table(sys, frame, dt);
    const EtaTable eta1 = eta_table_uniform(bath1, dt, std::max(1, n_total - 1), q);

    Trajectory traj;
    traj.meta.engine = EngineKind::BruteForce;
    traj.meta.dt = dt;
    traj.meta.memory = memory_cutoff < 0 ? 0 : memory_cutoff;
    traj.push(0.0, sys.rho0);

    for (int total = 1; total <= n_total; ++total) {
        const EtaTable eta2 = eta_table_full(bath2, dt, total, q);
        PathSum sum;
        sum.n = n;
        sum.total = total;
        sum.cutoff = memory_cutoff;
        sum.l1 = frame.basis1.eigenvalues;
        sum.l2 = frame.basis2.eigenvalues;
        sum.rho0 = frame.basis2.vectors.adjoint() * sys.rho0 * frame.basis2.vectors;
        sum.k = &k;
        sum.eta1 = &eta1;
        sum.eta2 = &eta2;
        sum.path.assign(static_cast<std::size_t>(total), 0);
        sum.result = Matrix::Zero(n, n);
        sum.descend(0, 1.0, 0.0);
        traj.push(total * dt, to_computational(sum.result, frame));
    }
    return traj;
}

} // namespace quapi
