// propagator.hpp: Time-sliced two-bath evolution (K kernel, path tensor, readout),
// the standard single-bath engine and the brute-force path-sum oracle.
//
// A time slice j carries the composite index
//     k = ((s1+ * n + s1-) * n + s2+) * n + s2-
// over the eigenbases of the two coupling operators (n^4 states). The path tensor
// A_j holds `memory` consecutive slices j .. j+memory-1, oldest slice on the slowest
// axis. Influence factors are applied pairwise and streamed through the contraction;
// the (memory+1)-slice propagator is never materialized.

#pragma once

#include <cstddef>
#include <vector>

#include "quapi/kernels.hpp"
#include "quapi/model.hpp"
#include "quapi/tensor_buffer.hpp"
#include "quapi/trajectory.hpp"

namespace quapi {

struct SliceLayout {
    int n{2};

    int pair_states() const { return n * n; }
    int states() const { return n * n * n * n; }
    int pair1(int s) const { return s / pair_states(); } // (s1+, s1-) = s1+ * n + s1-
    int pair2(int s) const { return s % pair_states(); } // (s2+, s2-) = s2+ * n + s2-
    int plus(int pair) const { return pair / n; }
    int minus(int pair) const { return pair % n; }
    int encode(int s1p, int s1m, int s2p, int s2m) const { return ((s1p * n + s1m) * n + s2p) * n + s2m; }
};

struct CouplingFrame {
    CouplingBasis basis1; // joint eigenbasis of sigma1 and H_S
    CouplingBasis basis2;
};

CouplingFrame coupling_frame(const SystemSpec& sys);

// K(slice_j, (s2+, s2-)_{j+1}) for one time step.
class KTable {
public:
    KTable() = default;
    KTable(SliceLayout layout, std::vector<Complex> values, double dt)
        : layout_(layout), values_(std::move(values)), dt_(dt) {}

    const SliceLayout& layout() const { return layout_; }
    double dt() const { return dt_; }
    Complex operator()(int slice, int next_pair2) const {
        return values_[static_cast<std::size_t>(slice * layout_.pair_states() + next_pair2)];
    }
    const std::vector<Complex>& values() const { return values_; }

private:
    SliceLayout layout_;
    std::vector<Complex> values_;
    double dt_{0.0};
};

// Throws DephasingConditionError if [sigma1, H_S] != 0.
KTable build_k_table(const SystemSpec& sys, const CouplingFrame& frame, double dt);
KTable build_k_table(const SystemSpec& sys, double dt);

class PathTensor {
public:
    PathTensor() = default;
    PathTensor(SliceLayout layout, int axes, int step);

    const SliceLayout& layout() const { return layout_; }
    int axes() const { return axes_; }
    // Index of the oldest slice held.
    int step() const { return step_; }
    void set_step(int j) { step_ = j; }

    std::size_t size() const { return buffer_.size(); }
    Complex* data() { return buffer_.data(); }
    const Complex* data() const { return buffer_.data(); }
    Complex& operator[](std::size_t i) { return buffer_[i]; }
    const Complex& operator[](std::size_t i) const { return buffer_[i]; }

    TensorBuffer& buffer() { return buffer_; }

private:
    SliceLayout layout_;
    int axes_{0};
    int step_{0};
    TensorBuffer buffer_;
};

// rho0 in the sigma2 eigenbasis, broadcast along every axis except the sigma2 pair of
// slice 0.
PathTensor init_tensor(const SystemSpec& sys, const CouplingFrame& frame, int memory);

// Worker count; results are independent of it (fixed reduction order).
struct Execution {
    int workers{1};
};

// Retires the oldest slice of `a` and appends a new one. `eta1` is the uniform
// bath-1 table, `eta2` a half-step-terminated bath-2 table whose interior and
// first-column entries cover separations up to a.axes().
PathTensor propagate_step(const PathTensor& a, const KTable& k, const CouplingFrame& frame, const EtaTable& eta1,
                          const EtaTable& eta2, Execution exec = {});

// Reduced density matrix (sigma2 eigenbasis, rows = ket index) at N = a.step() + a.axes().
// eta2 must provide the terminal entries for N (its last row; its corner when
// a.step() == 0, in which case eta2.last_index() must equal N).
Matrix readout(const PathTensor& a, const KTable& k, const CouplingFrame& frame, const EtaTable& eta1,
               const EtaTable& eta2, int n_final, Execution exec = {});

// Converts a sigma2-eigenbasis density matrix to the computational basis.
Matrix to_computational(const Matrix& rho_sigma2, const CouplingFrame& frame);

struct RunParameters {
    double dt{0.1};
    int memory{1};
    double t_max{1.0};
    int stride{1};
    QuadratureConfig quadrature;
    Execution exec;
    std::size_t memory_limit_bytes{std::size_t{3} << 30};

    int total_steps() const;
    void validate() const;
};

// Peak path-tensor bytes the two-bath engine needs for (n, memory).
std::size_t two_bath_tensor_bytes(int n, int memory);

// Untruncated direct evaluation of the time-sliced path integral at t = j * dt, j <= memory.
Matrix short_time_direct(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2, double dt,
                         int memory, int j, const QuadratureConfig& q = {});

Trajectory evolve_two_bath(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2,
                           const RunParameters& params);

// Standard single-bath scheme: slices in the eigenbasis of `coupling`, full system
// propagator between slices, half-step-terminated coefficients. Independent code path.
Trajectory evolve_single_bath(const Matrix& hamiltonian, const Matrix& coupling, const Matrix& rho0,
                              const ThermalBath& bath, const RunParameters& params);

inline constexpr double kBruteForcePathCap = 1e8;

// Exact sum over all discrete paths for N = 1 .. n_total, optionally dropping
// influence pairs further apart than `memory_cutoff` (< 0: keep all).
// Throws ResourceLimitError if n^(4 n_total) exceeds the cap.
Trajectory brute_force(const SystemSpec& sys, const ThermalBath& bath1, const ThermalBath& bath2, double dt,
                       int n_total, const QuadratureConfig& q = {}, int memory_cutoff = -1);

} // namespace quapi
