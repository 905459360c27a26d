// two_bath.cpp: K kernel, path tensor propagation and readout for two non-commuting baths

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "quapi/errors.hpp"
#include "quapi/propagator.hpp"

namespace quapi {

namespace {

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

constexpr std::size_t kBlock = 256;

// x(s, m_1..m_L, t) *= diag(s) * prod_k factors[k-1](s, m_k), tail index t untouched.
// factors[k] is an S x S row-major table.
void apply_weights(Complex* x, std::size_t S, int L, std::size_t tail, const Complex* diag,
                   const std::vector<const Complex*>& factors, int workers) {
    const std::size_t inner = ipow(S, L) * tail;
    const long states = static_cast<long>(S);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long sl = 0; sl < states; ++sl) {
        const auto s = static_cast<std::size_t>(sl);
        Complex* xs = x + s * inner;
        if (L == 0) {
            for (std::size_t t = 0; t < tail; ++t) xs[t] *= diag[s];
            continue;
        }
        // Odometer over m_1..m_{L-1} with running prefix products; m_L and the tail
        // are handled in the innermost loop.
        std::vector<std::size_t> idx(static_cast<std::size_t>(L), 0);
        std::vector<Complex> prefix(static_cast<std::size_t>(L), diag[s]);
        for (int e = 0; e + 1 < L; ++e) {
            const Complex base = e == 0 ? diag[s] : prefix[static_cast<std::size_t>(e - 1)];
            prefix[static_cast<std::size_t>(e)] = base * factors[static_cast<std::size_t>(e)][s * S];
        }
        const Complex* last = factors[static_cast<std::size_t>(L - 1)] + s * S;
        const std::size_t outer = ipow(S, L - 1);
        for (std::size_t o = 0; o < outer; ++o) {
            const Complex p = L > 1 ? prefix[static_cast<std::size_t>(L - 2)] : diag[s];
            Complex* block = xs + o * S * tail;
            for (std::size_t ml = 0; ml < S; ++ml) {
                const Complex w = p * last[ml];
                Complex* cell = block + ml * tail;
                for (std::size_t t = 0; t < tail; ++t) cell[t] *= w;
            }
            int d = L - 2;
            while (d >= 0) {
                if (++idx[static_cast<std::size_t>(d)] < S) break;
                idx[static_cast<std::size_t>(d)] = 0;
                --d;
            }
            for (int e = std::max(d, 0); e + 1 < L; ++e) {
                const Complex base = e == 0 ? diag[s] : prefix[static_cast<std::size_t>(e - 1)];
                prefix[static_cast<std::size_t>(e)] =
                    base * factors[static_cast<std::size_t>(e)][s * S + idx[static_cast<std::size_t>(e)]];
            }
        }
    }
}

// y(m, g) = sum_s x(s, m) w(s, g); fixed summation order over s.
void contract_expand(const Complex* x, std::size_t S, std::size_t M, const Complex* w, std::size_t G, Complex* y,
                     int workers) {
    const long blocks = static_cast<long>((M + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long b = 0; b < blocks; ++b) {
        const std::size_t m0 = static_cast<std::size_t>(b) * kBlock;
        const std::size_t len = std::min(kBlock, M - m0);
        Complex* yb = y + m0 * G;
        std::fill(yb, yb + len * G, Complex(0.0));
        for (std::size_t s = 0; s < S; ++s) {
            const Complex* xs = x + s * M + m0;
            const Complex* ws = w + s * G;
            for (std::size_t i = 0; i < len; ++i) {
                const Complex xv = xs[i];
                Complex* yi = yb + i * G;
                for (std::size_t g = 0; g < G; ++g) yi[g] += xv * ws[g];
            }
        }
    }
}

// y(m, f) = sum_s x(s, m, f) v(s, f).
void contract_tail(const Complex* x, std::size_t S, std::size_t M, std::size_t F, const Complex* v, Complex* y,
                   int workers) {
    const long blocks = static_cast<long>((M + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long b = 0; b < blocks; ++b) {
        const std::size_t m0 = static_cast<std::size_t>(b) * kBlock;
        const std::size_t len = std::min(kBlock, M - m0);
        Complex* yb = y + m0 * F;
        std::fill(yb, yb + len * F, Complex(0.0));
        for (std::size_t s = 0; s < S; ++s) {
            const Complex* xs = x + (s * M + m0) * F;
            const Complex* vs = v + s * F;
            for (std::size_t i = 0; i < len; ++i) {
                for (std::size_t f = 0; f < F; ++f) yb[i * F + f] += xs[i * F + f] * vs[f];
            }
        }
    }
}

struct ReadoutScratch {
    TensorBuffer first;
    TensorBuffer second;
};

// Influence and kernel tables for one (K, eta1, eta2) configuration.
class StepContext {
public:
    StepContext(const KTable& k, const CouplingFrame& frame, const EtaTable& eta1, const EtaTable& eta2,
                Execution exec)
        : k_(k), layout_(k.layout()), lambda1_(frame.basis1.eigenvalues), lambda2_(frame.basis2.eigenvalues),
          eta1_(eta1), eta2_(eta2), workers_(std::max(1, exec.workers)) {
        assert(eta1.pattern() == EtaPattern::Uniform);
        assert(eta2.pattern() == EtaPattern::HalfStepTerminated);
    }

    std::size_t S() const { return static_cast<std::size_t>(layout_.states()); }
    std::size_t P2() const { return static_cast<std::size_t>(layout_.pair_states()); }

    // Multiplies the factors of retiring slice j with its L younger partners (j+1..j+L)
    // into x (layout [s_j][m_1..m_L][tail]). K couples to m_1 when L >= 1.
    void weight(Complex* x, int j, int L, std::size_t tail) const {
        const auto diag = diag_table(j);
        std::vector<std::vector<Complex>> tables;
        tables.reserve(static_cast<std::size_t>(L));
        for (int k = 1; k <= L; ++k) {
            tables.push_back(pair_table(j, k));
            if (k == 1) fold_k(tables.back(), S());
        }
        std::vector<const Complex*> ptrs;
        for (const auto& t : tables) ptrs.push_back(t.data());
        apply_weights(x, S(), L, tail, diag.data(), ptrs, workers_);
    }

    // out(m, new) = sum_s b(s, m) W(s, new) for weighted b with L middle axes.
    void expand(const Complex* b, int j, int L, Complex* out) const {
        auto w = pair_table(j, L + 1);
        if (L == 0) fold_k(w, S());
        contract_expand(b, S(), ipow(S(), L), w.data(), S(), out, workers_);
    }

    // Contracts a weighted tensor b (retiring slice j, L further slices) into the
    // reduced density matrix at N = j + L + 1, in the sigma2 eigenbasis.
    Matrix readout_weighted(const Complex* b, int j, int L, int n_final, ReadoutScratch& scratch) const {
        assert(j + L + 1 == n_final);
        const std::size_t P = P2();
        auto v = terminal_table(j, n_final);
        if (L == 0) fold_k(v, P);
        std::size_t m = ipow(S(), L);
        ensure(scratch.first, m * P);
        contract_expand(b, S(), m, v.data(), P, scratch.first.data(), workers_);

        TensorBuffer* cur = &scratch.first;
        TensorBuffer* nxt = &scratch.second;
        for (int jj = j + 1; jj < n_final; ++jj) {
            const int rest = n_final - 1 - jj;
            weight(cur->data(), jj, rest, P);
            auto vt = terminal_table(jj, n_final);
            if (rest == 0) fold_k(vt, P);
            m = ipow(S(), rest);
            ensure(*nxt, m * P);
            contract_tail(cur->data(), S(), m, P, vt.data(), nxt->data(), workers_);
            std::swap(cur, nxt);
        }

        const int n = layout_.n;
        Matrix rho(n, n);
        const Complex end = eta2_.end_diagonal();
        for (int f = 0; f < static_cast<int>(P); ++f) {
            const int fp = layout_.plus(f);
            const int fm = layout_.minus(f);
            rho(fp, fm) = (*cur)[static_cast<std::size_t>(f)] * pair_influence(end, lambda2_(fp), lambda2_(fm),
                                                                                lambda2_(fp), lambda2_(fm));
        }
        return rho;
    }

private:
    static void ensure(TensorBuffer& buf, std::size_t n) {
        if (buf.size() < n) buf = TensorBuffer(n);
    }

    Complex eta2_pair(int j, int k) const {
        if (k == 0) return j == 0 ? eta2_.end_diagonal() : eta2_.separation(0);
        return j == 0 ? eta2_.first_column(k) : eta2_.separation(k);
    }

    Complex eta2_terminal(int j, int n_final) const {
        if (j == 0) {
            assert(eta2_.last_index() == n_final);
            return eta2_.corner();
        }
        return eta2_.last_row(n_final - j);
    }

    std::vector<Complex> bath_pair(const RealVector& lambda, Complex eta) const {
        const int P = layout_.pair_states();
        std::vector<Complex> t(static_cast<std::size_t>(P * P));
        for (int e = 0; e < P; ++e) {
            for (int l = 0; l < P; ++l) {
                t[static_cast<std::size_t>(e * P + l)] =
                    pair_influence(eta, lambda(layout_.plus(l)), lambda(layout_.minus(l)), lambda(layout_.plus(e)),
                                   lambda(layout_.minus(e)));
            }
        }
        return t;
    }

    std::vector<Complex> diag_table(int j) const {
        const int P = layout_.pair_states();
        const auto t1 = bath_pair(lambda1_, eta1_.separation(0));
        const auto t2 = bath_pair(lambda2_, eta2_pair(j, 0));
        std::vector<Complex> d(S());
        for (int s = 0; s < layout_.states(); ++s) {
            const int p1 = layout_.pair1(s);
            const int p2 = layout_.pair2(s);
            d[static_cast<std::size_t>(s)] =
                t1[static_cast<std::size_t>(p1 * P + p1)] * t2[static_cast<std::size_t>(p2 * P + p2)];
        }
        return d;
    }

    // C(e, l) for the pair (j, j + k), both baths.
    std::vector<Complex> pair_table(int j, int k) const {
        const int P = layout_.pair_states();
        const auto t1 = bath_pair(lambda1_, eta1_.separation(k));
        const auto t2 = bath_pair(lambda2_, eta2_pair(j, k));
        const std::size_t S = this->S();
        std::vector<Complex> c(S * S);
        for (std::size_t e = 0; e < S; ++e) {
            const int e1 = layout_.pair1(static_cast<int>(e));
            const int e2 = layout_.pair2(static_cast<int>(e));
            for (std::size_t l = 0; l < S; ++l) {
                const int l1 = layout_.pair1(static_cast<int>(l));
                const int l2 = layout_.pair2(static_cast<int>(l));
                c[e * S + l] = t1[static_cast<std::size_t>(e1 * P + l1)] * t2[static_cast<std::size_t>(e2 * P + l2)];
            }
        }
        return c;
    }

    // V(e, f): bath-2 factor between slice j and the terminal slice N.
    std::vector<Complex> terminal_table(int j, int n_final) const {
        const int P = layout_.pair_states();
        const auto t2 = bath_pair(lambda2_, eta2_terminal(j, n_final));
        std::vector<Complex> v(S() * P2());
        for (int e = 0; e < layout_.states(); ++e) {
            const int e2 = layout_.pair2(e);
            for (int f = 0; f < P; ++f) v[static_cast<std::size_t>(e * P + f)] = t2[static_cast<std::size_t>(e2 * P + f)];
        }
        return v;
    }

    // table(e, x) *= K(e, pair2(x)); `width` is S for slice partners, P2 for the terminal.
    void fold_k(std::vector<Complex>& table, std::size_t width) const {
        for (std::size_t e = 0; e < S(); ++e) {
            for (std::size_t x = 0; x < width; ++x) {
                const int next = width == S() ? layout_.pair2(static_cast<int>(x)) : static_cast<int>(x);
                table[e * width + x] *= k_(static_cast<int>(e), next);
            }
        }
    }

    const KTable& k_;
    SliceLayout layout_;
    RealVector lambda1_;
    RealVector lambda2_;
    const EtaTable& eta1_;
    const EtaTable& eta2_;
    int workers_;
};

int checked_dimension(const SystemSpec& sys) {
    const Index n = sys.dimension();
    if (n < 1 || n > 6) throw ValidationError("two-bath engine supports dimensions 1..6");
    return static_cast<int>(n);
}

} // namespace

// --------------------------- frame and K --------------------------------------

CouplingFrame coupling_frame(const SystemSpec& sys) {
    return CouplingFrame{eigenbasis(sys.sigma1, sys.hamiltonian), eigenbasis(sys.sigma2)};
}

KTable build_k_table(const SystemSpec& sys, const CouplingFrame& frame, double dt) {
    require_dephasing_condition(sys);
    const SliceLayout layout{checked_dimension(sys)};
    const int n = layout.n;
    const Matrix o12 = overlap_matrix(frame.basis1, frame.basis2); // <s1|s2>
    const Vector phase = system_phase_step(sys, frame.basis1, dt);

    // forward(s2', s1, s2) = <s2'|s1> <s1|e^{-iH dt}|s1> <s1|s2>
    auto forward = [&](int s2next, int s1, int s2) { return std::conj(o12(s1, s2next)) * phase(s1) * o12(s1, s2); };

    const int P = layout.pair_states();
    std::vector<Complex> values(static_cast<std::size_t>(layout.states() * P));
    for (int s1p = 0; s1p < n; ++s1p)
        for (int s1m = 0; s1m < n; ++s1m)
            for (int s2p = 0; s2p < n; ++s2p)
                for (int s2m = 0; s2m < n; ++s2m) {
                    const int s = layout.encode(s1p, s1m, s2p, s2m);
                    for (int np = 0; np < n; ++np)
                        for (int nm = 0; nm < n; ++nm) {
                            values[static_cast<std::size_t>(s * P + np * n + nm)] =
                                forward(np, s1p, s2p) * std::conj(forward(nm, s1m, s2m));
                        }
                }
    return KTable(layout, std::move(values), dt);
}

KTable build_k_table(const SystemSpec& sys, double dt) { return build_k_table(sys, coupling_frame(sys), dt); }

// --------------------------- path tensor ---------------------------------------

PathTensor::PathTensor(SliceLayout layout, int axes, int step)
    : layout_(layout), axes_(axes), step_(step),
      buffer_(ipow(static_cast<std::size_t>(layout.states()), axes)) {}

PathTensor init_tensor(const SystemSpec& sys, const CouplingFrame& frame, int memory) {
    if (memory < 1) throw ValidationError("init_tensor: memory must be >= 1");
    const SliceLayout layout{checked_dimension(sys)};
    PathTensor a(layout, memory, 0);
    const Matrix rho = frame.basis2.vectors.adjoint() * sys.rho0 * frame.basis2.vectors;
    const std::size_t inner = a.size() / static_cast<std::size_t>(layout.states());
    for (int s = 0; s < layout.states(); ++s) {
        const int p2 = layout.pair2(s);
        const Complex v = rho(layout.plus(p2), layout.minus(p2));
        std::fill(a.data() + static_cast<std::size_t>(s) * inner, a.data() + static_cast<std::size_t>(s + 1) * inner, v);
    }
    return a;
}

PathTensor propagate_step(const PathTensor& a, const KTable& k, const CouplingFrame& frame, const EtaTable& eta1,
                          const EtaTable& eta2, Execution exec) {
    const StepContext ctx(k, frame, eta1, eta2, exec);
    TensorBuffer weighted(a.size());
    std::copy(a.data(), a.data() + a.size(), weighted.data());
    const int L = a.axes() - 1;
    ctx.weight(weighted.data(), a.step(), L, 1);
    PathTensor next(a.layout(), a.axes(), a.step() + 1);
    ctx.expand(weighted.data(), a.step(), L, next.data());
    return next;
}

Matrix readout(const PathTensor& a, const KTable& k, const CouplingFrame& frame, const EtaTable& eta1,
               const EtaTable& eta2, int n_final, Execution exec) {
    if (a.step() + a.axes() != n_final) throw ValidationError("readout: N must equal step + memory");
    const StepContext ctx(k, frame, eta1, eta2, exec);
    TensorBuffer weighted(a.size());
    std::copy(a.data(), a.data() + a.size(), weighted.data());
    const int L = a.axes() - 1;
    ctx.weight(weighted.data(), a.step(), L, 1);
    ReadoutScratch scratch;
    return ctx.readout_weighted(weighted.data(), a.step(), L, n_final, scratch);
}

Matrix to_computational(const Matrix& rho_sigma2, const CouplingFrame& frame) {
    return frame.basis2.vectors * rho_sigma2 * frame.basis2.vectors.adjoint();
}

// --------------------------- run driver ----------------------------------------

int RunParameters::total_steps() const { return static_cast<int>(std::lround(t_max / dt)); }

void RunParameters::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("numerics.dt must be > 0");
    if (memory < 1) throw ValidationError("numerics.memory must be >= 1");
    if (!(t_max >= dt)) throw ValidationError("numerics.t_max must be >= dt");
    if (stride < 1) throw ValidationError("numerics.stride must be >= 1");
    if (exec.workers < 1) throw ValidationError("numerics.workers must be >= 1");
    quadrature.validate();
}

std::size_t two_bath_tensor_bytes(int n, int memory) {
    const std::size_t S = ipow(static_cast<std::size_t>(n), 4);
    const std::size_t P = ipow(static_cast<std::size_t>(n), 2);
    std::size_t values = 2 * ipow(S, memory) + ipow(S, memory - 1) * P;
    if (memory >= 2) values += ipow(S, memory - 2) * P;
    return values * sizeof(Complex);
}

namespace {

Matrix short_time_with(const SystemSpec& sys, const CouplingFrame& frame, const KTable& k, const EtaTable& eta1,
                       const ThermalBath& bath2, double dt, int j, const QuadratureConfig& q, Execution exec) {
    const EtaTable eta2 = eta_table_full(bath2, dt, j, q, -1, exec.workers);
    const PathTensor a0 = init_tensor(sys, frame, j);
    return readout(a0, k, frame, eta1, eta2, j, exec);
}

void validate_two_bath(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2) {
    sys.validate();
    require_dephasing_condition(sys);
    bath1.validate();
    bath2.validate();
}

} // namespace

Matrix short_time_direct(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2, double dt,
                         int memory, int j, const QuadratureConfig& q) {
    validate_two_bath(sys, bath1, bath2);
    if (j < 1 || j > memory) throw ValidationError("short_time_direct: need 1 <= j <= memory");
    const CouplingFrame frame = coupling_frame(sys);
    const KTable k = build_k_table(sys, frame, dt);
    const EtaTable eta1 = eta_table_uniform(bath1, dt, j, q);
    return to_computational(short_time_with(sys, frame, k, eta1, bath2, dt, j, q, {}), frame);
}

Trajectory evolve_two_bath(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2,
                           const RunParameters& params) {
    validate_two_bath(sys, bath1, bath2);
    params.validate();
    const int n = checked_dimension(sys);
    const int memory = params.memory;
    const std::size_t bytes = two_bath_tensor_bytes(n, memory);
    if (bytes > params.memory_limit_bytes) {
        std::ostringstream os;
        os << "two-bath run needs " << bytes << " bytes of path-tensor storage (n = " << n << ", memory = " << memory
           << "), above the limit of " << params.memory_limit_bytes;
        throw ResourceLimitError(os.str());
    }

    const double dt = params.dt;
    const int n_total = params.total_steps();
    const Execution exec = params.exec;
    const CouplingFrame frame = coupling_frame(sys);
    const KTable k = build_k_table(sys, frame, dt);
    const EtaTable eta1 = eta_table_uniform(bath1, dt, std::max(memory, n_total - 1), params.quadrature, memory,
                                            exec.workers);

    Trajectory traj;
    traj.meta.engine = EngineKind::TwoBath;
    traj.meta.dt = dt;
    traj.meta.memory = memory;
    traj.push(0.0, sys.rho0);

    const int short_end = std::min(memory, n_total);
    for (int j = 1; j <= short_end; ++j) {
        if (j % params.stride != 0) continue;
        const Matrix rho = short_time_with(sys, frame, k, eta1, bath2, dt, j, params.quadrature, exec);
        traj.push(j * dt, to_computational(rho, frame));
    }
    if (n_total <= memory) return traj;

    const EtaTable eta2 =
        eta_table_full(bath2, dt, std::max(n_total, memory + 2), params.quadrature, memory, exec.workers);
    const StepContext ctx(k, frame, eta1, eta2, exec);
    PathTensor a = init_tensor(sys, frame, memory);
    TensorBuffer next(a.size());
    ReadoutScratch scratch;
    const int L = memory - 1;
    for (int j = 0;; ++j) {
        ctx.weight(a.data(), j, L, 1);
        const int n_final = j + memory;
        if (j >= 1 && n_final % params.stride == 0) {
            traj.push(n_final * dt, to_computational(ctx.readout_weighted(a.data(), j, L, n_final, scratch), frame));
        }
        if (n_final >= n_total) break;
        ctx.expand(a.data(), j, L, next.data());
        a.buffer().swap(next);
        a.set_step(j + 1);
    }
    return traj;
}

} // namespace quapi
