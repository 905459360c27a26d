// trajectory.hpp: Time series of reduced density matrices and the trajectory CSV format

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "quapi/model.hpp"

namespace quapi {

enum class EngineKind { TwoBath, SingleBath, BruteForce, ExactDephasing };

const char* to_string(EngineKind e);

struct TrajectoryMetadata {
    EngineKind engine{EngineKind::TwoBath};
    double dt{0.0};
    int memory{0}; // Delta j_max; 0 when not applicable
    double tau_mem() const { return dt * memory; }
    std::string description;
};

// Density matrices are stored in the computational basis.
struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> rho;
    std::vector<double> trace_deviation;
    TrajectoryMetadata meta;

    std::size_t size() const { return times.size(); }
    Index dimension() const { return rho.empty() ? 0 : rho.front().rows(); }

    void push(double t, const Matrix& r);

    // <op>(t_i) = Tr(rho_i op)
    std::vector<double> expectation(const Matrix& op) const;
    // Pauli expectations; defined for dimension 2 only.
    std::vector<double> px() const;
    std::vector<double> py() const;
    std::vector<double> pz() const;

    double max_trace_deviation() const;
    double max_hermiticity_defect() const;
};

// Columns: t, then re/im of rho entries in row-major order, then px,py,pz (n = 2 only),
// then trace_dev. Header row, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// Parses the CSV written above. Throws ValidationError on malformed input.
Trajectory read_trajectory_csv(std::istream& is);

// Linear interpolation of a sampled series at time t (clamped to the sample range).
double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t);

} // namespace quapi
