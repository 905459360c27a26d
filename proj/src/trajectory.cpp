// trajectory.cpp: Trajectory observables and CSV I/O

#include "quapi/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "quapi/errors.hpp"

namespace quapi {

const char* to_string(EngineKind e) {
    switch (e) {
    case EngineKind::TwoBath: return "two-bath";
    case EngineKind::SingleBath: return "single-bath";
    case EngineKind::BruteForce: return "brute-force";
    case EngineKind::ExactDephasing: return "exact-dephasing";
    }
    return "unknown";
}

void Trajectory::push(double t, const Matrix& r) {
    times.push_back(t);
    rho.push_back(r);
    trace_deviation.push_back(std::abs(r.trace() - 1.0));
}

std::vector<double> Trajectory::expectation(const Matrix& op) const {
    std::vector<double> out;
    out.reserve(rho.size());
    for (const auto& r : rho) out.push_back((r * op).trace().real());
    return out;
}

std::vector<double> Trajectory::px() const { return expectation(pauli::sigma_x()); }
std::vector<double> Trajectory::py() const { return expectation(pauli::sigma_y()); }
std::vector<double> Trajectory::pz() const { return expectation(pauli::sigma_z()); }

double Trajectory::max_trace_deviation() const {
    double m = 0.0;
    for (double d : trace_deviation) m = std::max(m, d);
    return m;
}

double Trajectory::max_hermiticity_defect() const {
    double m = 0.0;
    for (const auto& r : rho) m = std::max(m, hermiticity_defect(r));
    return m;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const Index n = traj.dimension();
    os << "t";
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) os << ",re_rho" << i << j << ",im_rho" << i << j;
    }
    if (n == 2) os << ",px,py,pz";
    os << ",trace_dev\n";

    const auto flags = os.flags();
    const auto precision = os.precision();
    os << std::setprecision(17);
    std::vector<double> px, py, pz;
    if (n == 2) {
        px = traj.px();
        py = traj.py();
        pz = traj.pz();
    }
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << traj.times[k];
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) os << ',' << traj.rho[k](i, j).real() << ',' << traj.rho[k](i, j).imag();
        }
        if (n == 2) os << ',' << px[k] << ',' << py[k] << ',' << pz[k];
        os << ',' << traj.trace_deviation[k] << '\n';
    }
    os.flags(flags);
    os.precision(precision);
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("trajectory csv: line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
    }
}

} // namespace

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("trajectory csv: empty input");
    const auto header = split(line);
    if (header.size() < 4 || header.front() != "t" || header.back() != "trace_dev") {
        throw ValidationError("trajectory csv: header must start with 't' and end with 'trace_dev'");
    }
    const std::size_t rho_cols = static_cast<std::size_t>(
        std::count_if(header.begin(), header.end(), [](const std::string& h) { return h.rfind("re_rho", 0) == 0; }));
    const auto n = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(rho_cols))));
    if (n < 1 || static_cast<std::size_t>(n * n) != rho_cols) {
        throw ValidationError("trajectory csv: rho columns do not form a square matrix");
    }
    const std::size_t expected = 1 + 2 * rho_cols + (n == 2 ? 3 : 0) + 1;
    if (header.size() != expected) throw ValidationError("trajectory csv: unexpected column count in header");
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const std::size_t c = 1 + 2 * static_cast<std::size_t>(i * n + j);
            const std::string suffix = std::to_string(i) + std::to_string(j);
            if (header[c] != "re_rho" + suffix || header[c + 1] != "im_rho" + suffix) {
                throw ValidationError("trajectory csv: unexpected column name '" + header[c] + "'");
            }
        }
    }

    Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != expected) {
            throw ValidationError("trajectory csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " + std::to_string(expected));
        }
        Matrix r(n, n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                const std::size_t c = 1 + 2 * static_cast<std::size_t>(i * n + j);
                r(i, j) = Complex(parse_double(cells[c], line_no), parse_double(cells[c + 1], line_no));
            }
        }
        traj.times.push_back(parse_double(cells.front(), line_no));
        traj.rho.push_back(r);
        traj.trace_deviation.push_back(parse_double(cells.back(), line_no));
    }
    if (traj.size() == 0) throw ValidationError("trajectory csv: no data rows");
    return traj;
}

double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
    if (times.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double f = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - f) * values[lo] + f * values[hi];
}

} // namespace quapi
