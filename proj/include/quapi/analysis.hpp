// analysis.hpp: Weak-coupling reference rates, exact pure dephasing, damped-cosine
// fits and convergence reports over (dt, memory) grids

#pragma once

#include <optional>
#include <vector>

#include "quapi/kernels.hpp"
#include "quapi/trajectory.hpp"

namespace quapi {

// gamma * delta * coth(delta / 2T): dephasing from a bath on the sigma_z coupling.
double redfield_dephasing_z(double gamma, double delta, double temperature);
// 4 gamma T: dephasing from a bath on the sigma_x coupling (high-temperature limit).
double redfield_dephasing_x(double gamma, double temperature);

// Two-level system H = (delta/2) sigma_x with only a sigma_x bath, P_z(0) = 1:
//   P_z = cos(delta t) e^{-G(t)},  P_y = -sin(delta t) e^{-G(t)},  P_x = 0,
//   G(t) = 4 int dw G(w)/w^2 coth(beta w / 2) (1 - cos w t).
Trajectory exact_pure_dephasing(const ThermalBath& bath, double delta, const std::vector<double>& times,
                                const QuadratureConfig& q = {});

enum class Channel { Px, Py, Pz };

struct FitOptions {
    std::optional<double> t_min; // default: one estimated period after the first sample
    std::optional<double> t_max; // default: last sample
    Channel channel{Channel::Pz};
    double parameter_tolerance{1e-10};
    int max_iterations{200};
};

// y(t) = a e^{-rate t} cos(frequency t + phase) + offset
struct FitResult {
    double amplitude{0.0};
    double rate{0.0};
    double frequency{0.0};
    double phase{0.0};
    double offset{0.0};
    double residual_rms{0.0};
    double t_min{0.0};
    double t_max{0.0};
    int iterations{0};

    double operator()(double t) const;
};

// Throws ValidationError for too few samples in the window and NumericalError when
// no oscillation is found or the refinement does not converge.
FitResult fit_damped_cosine(const std::vector<double>& t, const std::vector<double>& y, const FitOptions& opt = {});
FitResult fit_damped_cosine(const Trajectory& traj, const FitOptions& opt = {});

struct ConvergenceGroup {
    double tau_mem{0.0};
    std::vector<std::size_t> runs; // indices into the scanned list, dt descending
    double max_deviation{0.0};     // max |dP_z| over all pairs in the group
};

struct ConvergenceReport {
    std::vector<ConvergenceGroup> groups;    // tau_mem ascending
    std::vector<double> inter_group_deviation; // between successive groups (finest dt of each)
    double threshold{0.01};
    bool converged{false};
    double t_min{0.0};
    double t_max{0.0};
    std::size_t grid_points{0};
};

// P_z of all runs is resampled onto the coarsest grid inside the common time range
// (optionally narrowed to [t_min, t_max]). Throws ValidationError when the ranges do
// not overlap.
ConvergenceReport convergence_scan(const std::vector<Trajectory>& runs, double threshold = 0.01,
                                   std::optional<double> t_min = {}, std::optional<double> t_max = {});

} // namespace quapi
