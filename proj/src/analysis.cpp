// analysis.cpp: Reference rates, exact pure dephasing, damped-cosine fits, convergence scans

#include "quapi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/NonLinearOptimization>

#include "quapi/errors.hpp"

namespace quapi {

double redfield_dephasing_z(double gamma, double delta, double temperature) {
    if (gamma < 0.0 || !(delta > 0.0) || !(temperature > 0.0)) {
        throw ValidationError("redfield_dephasing_z: need gamma >= 0, delta > 0, T > 0");
    }
    return gamma * delta / std::tanh(delta / (2.0 * temperature));
}

double redfield_dephasing_x(double gamma, double temperature) {
    if (gamma < 0.0 || !(temperature > 0.0)) throw ValidationError("redfield_dephasing_x: need gamma >= 0, T > 0");
    return 4.0 * gamma * temperature;
}

Trajectory exact_pure_dephasing(const ThermalBath& bath, double delta, const std::vector<double>& times,
                                const QuadratureConfig& q) {
    bath.validate();
    q.validate();
    Trajectory traj;
    traj.meta.engine = EngineKind::ExactDephasing;
    if (times.size() > 1) traj.meta.dt = times[1] - times[0];
    for (double t : times) {
        const double decay = t == 0.0 ? 1.0 : std::exp(-4.0 * dephasing_exponent_integral(bath, t, q));
        const double pz = std::cos(delta * t) * decay;
        const double py = -std::sin(delta * t) * decay;
        const Matrix rho = 0.5 * (pauli::identity() + py * pauli::sigma_y() + pz * pauli::sigma_z());
        traj.push(t, rho);
    }
    return traj;
}

// ------------------------------ fitting ---------------------------------------

double FitResult::operator()(double t) const {
    return amplitude * std::exp(-rate * t) * std::cos(frequency * t + phase) + offset;
}

namespace {

std::vector<double> zero_crossings(const std::vector<double>& t, const std::vector<double>& y, double level) {
    std::vector<double> out;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double a = y[i - 1] - level;
        const double b = y[i] - level;
        if (a == 0.0 && i == 1) out.push_back(t[0]);
        if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
            out.push_back(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
        }
    }
    return out;
}

double frequency_from_crossings(const std::vector<double>& z) {
    return std::numbers::pi * static_cast<double>(z.size() - 1) / (z.back() - z.front());
}

double mean_of_tail(const std::vector<double>& y) {
    const std::size_t start = y.size() / 2;
    double s = 0.0;
    for (std::size_t i = start; i < y.size(); ++i) s += y[i];
    return s / static_cast<double>(y.size() - start);
}

// Log-envelope slope through the extrema between consecutive crossings.
double rate_from_extrema(const std::vector<double>& t, const std::vector<double>& y, double level,
                         const std::vector<double>& z) {
    std::vector<double> et, ea;
    for (std::size_t c = 0; c + 1 < z.size(); ++c) {
        double best = 0.0, when = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < z[c] || t[i] > z[c + 1]) continue;
            const double v = std::abs(y[i] - level);
            if (v > best) {
                best = v;
                when = t[i];
            }
        }
        if (best > 0.0) {
            et.push_back(when);
            ea.push_back(std::log(best));
        }
    }
    if (et.size() < 2) return 0.0;
    Eigen::MatrixXd a(static_cast<Index>(et.size()), 2);
    Eigen::VectorXd b(static_cast<Index>(et.size()));
    for (std::size_t i = 0; i < et.size(); ++i) {
        a(static_cast<Index>(i), 0) = 1.0;
        a(static_cast<Index>(i), 1) = et[i];
        b(static_cast<Index>(i)) = ea[i];
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    return std::max(0.0, -coef(1));
}

struct DampedCosine {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<double>& t;
    const std::vector<double>& y;

    DampedCosine(const std::vector<double>& tt, const std::vector<double>& yy) : t(tt), y(yy) {}

    int inputs() const { return 5; }
    int values() const { return static_cast<int>(t.size()); }

    // p = (a, rate, frequency, phase, offset)
    int operator()(const InputType& p, ValueType& r) const {
        for (std::size_t i = 0; i < t.size(); ++i) {
            r(static_cast<Index>(i)) =
                p(0) * std::exp(-p(1) * t[i]) * std::cos(p(2) * t[i] + p(3)) + p(4) - y[i];
        }
        return 0;
    }

    int df(const InputType& p, JacobianType& j) const {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto row = static_cast<Index>(i);
            const double e = std::exp(-p(1) * t[i]);
            const double c = std::cos(p(2) * t[i] + p(3));
            const double s = std::sin(p(2) * t[i] + p(3));
            j(row, 0) = e * c;
            j(row, 1) = -t[i] * p(0) * e * c;
            j(row, 2) = -t[i] * p(0) * e * s;
            j(row, 3) = -p(0) * e * s;
            j(row, 4) = 1.0;
        }
        return 0;
    }
};

double residual_rms(const FitResult& f, const std::vector<double>& t, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = f(t[i]) - y[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(t.size()));
}

} // namespace

FitResult fit_damped_cosine(const std::vector<double>& t, const std::vector<double>& y, const FitOptions& opt) {
    if (t.size() != y.size() || t.size() < 8) throw ValidationError("fit: need at least 8 samples");

    // Coarse frequency over the full series sets the default window start.
    const double level0 = mean_of_tail(y);
    const auto z0 = zero_crossings(t, y, level0);
    if (z0.size() < 2) throw NumericalError("fit: signal has fewer than two crossings of its mean", 0.0);
    const double freq0 = frequency_from_crossings(z0);

    const double t_min = opt.t_min.value_or(t.front() + 2.0 * std::numbers::pi / freq0);
    const double t_max = opt.t_max.value_or(t.back());
    std::vector<double> wt, wy;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t_min - 1e-12 && t[i] <= t_max + 1e-12) {
            wt.push_back(t[i]);
            wy.push_back(y[i]);
        }
    }
    if (wt.size() < 8) {
        std::ostringstream os;
        os << "fit: window [" << t_min << ", " << t_max << "] holds " << wt.size() << " samples, need at least 8";
        throw ValidationError(os.str());
    }

    const double level = mean_of_tail(wy);
    const auto z = zero_crossings(wt, wy, level);
    if (z.size() < 2) throw NumericalError("fit: window has fewer than two crossings of its mean", 0.0);
    const double freq = frequency_from_crossings(z);
    const double rate = rate_from_extrema(wt, wy, level, z);

    // Amplitude, phase and offset from a linear least-squares solve at fixed (rate, freq).
    const auto m = static_cast<Index>(wt.size());
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd b(m);
    for (Index i = 0; i < m; ++i) {
        const double ti = wt[static_cast<std::size_t>(i)];
        const double e = std::exp(-rate * ti);
        a(i, 0) = e * std::cos(freq * ti);
        a(i, 1) = e * std::sin(freq * ti);
        a(i, 2) = 1.0;
        b(i) = wy[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d lin = a.colPivHouseholderQr().solve(b);

    Eigen::VectorXd p(5);
    p << std::hypot(lin(0), lin(1)), rate, freq, std::atan2(-lin(1), lin(0)), lin(2);

    DampedCosine functor(wt, wy);
    Eigen::LevenbergMarquardt<DampedCosine> lm(functor);
    lm.parameters.xtol = opt.parameter_tolerance;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = opt.max_iterations;
    const auto status = lm.minimize(p);

    FitResult r;
    r.amplitude = p(0);
    r.rate = p(1);
    r.frequency = p(2);
    r.phase = p(3);
    r.offset = p(4);
    r.t_min = wt.front();
    r.t_max = wt.back();
    r.iterations = static_cast<int>(lm.iter);
    r.residual_rms = residual_rms(r, wt, wy);

    using namespace Eigen::LevenbergMarquardtSpace;
    if (status == ImproperInputParameters || status == TooManyFunctionEvaluation || !std::isfinite(r.residual_rms)) {
        std::ostringstream os;
        os << "fit: refinement did not converge (status " << static_cast<int>(status) << "), best rate " << r.rate
           << ", frequency " << r.frequency << ", residual rms " << r.residual_rms;
        throw NumericalError(os.str(), r.residual_rms);
    }

    if (r.amplitude < 0.0) {
        r.amplitude = -r.amplitude;
        r.phase += std::numbers::pi;
    }
    if (r.frequency < 0.0) {
        r.frequency = -r.frequency;
        r.phase = -r.phase;
    }
    r.phase = std::remainder(r.phase, 2.0 * std::numbers::pi);
    if (r.rate < 0.0) {
        if (r.rate < -1e-6) {
            std::ostringstream os;
            os << "fit: signal grows (fitted rate " << r.rate << ")";
            throw NumericalError(os.str(), r.residual_rms);
        }
        r.rate = 0.0;
    }
    if (!(r.frequency > 0.0)) throw NumericalError("fit: fitted frequency is zero", r.residual_rms);
    return r;
}

FitResult fit_damped_cosine(const Trajectory& traj, const FitOptions& opt) {
    switch (opt.channel) {
    case Channel::Px: return fit_damped_cosine(traj.times, traj.px(), opt);
    case Channel::Py: return fit_damped_cosine(traj.times, traj.py(), opt);
    case Channel::Pz: break;
    }
    return fit_damped_cosine(traj.times, traj.pz(), opt);
}

// ------------------------------ convergence -----------------------------------

ConvergenceReport convergence_scan(const std::vector<Trajectory>& runs, double threshold, std::optional<double> t_min,
                                   std::optional<double> t_max) {
    if (runs.empty()) throw ValidationError("convergence scan: no runs");
    if (!(threshold > 0.0)) throw ValidationError("convergence scan: threshold must be > 0");

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::size_t coarsest = 0;
    double coarsest_step = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        if (r.size() < 2) throw ValidationError("convergence scan: every run needs at least two samples");
        lo = std::max(lo, r.times.front());
        hi = std::min(hi, r.times.back());
        const double step = (r.times.back() - r.times.front()) / static_cast<double>(r.size() - 1);
        if (step > coarsest_step) {
            coarsest_step = step;
            coarsest = i;
        }
    }
    if (t_min) lo = std::max(lo, *t_min);
    if (t_max) hi = std::min(hi, *t_max);
    std::vector<double> grid;
    for (double t : runs[coarsest].times) {
        if (t >= lo - 1e-12 && t <= hi + 1e-12) grid.push_back(t);
    }
    if (grid.empty()) throw ValidationError("convergence scan: runs share no common time range");

    std::vector<std::vector<double>> pz(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto values = runs[i].pz();
        for (double t : grid) pz[i].push_back(interpolate(runs[i].times, values, t));
    }
    auto deviation = [&](std::size_t a, std::size_t b) {
        double d = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) d = std::max(d, std::abs(pz[a][k] - pz[b][k]));
        return d;
    };

    std::map<long long, ConvergenceGroup> by_tau;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const double tau = runs[i].meta.tau_mem();
        auto& g = by_tau[std::llround(tau * 1e9)];
        g.tau_mem = tau;
        g.runs.push_back(i);
    }

    ConvergenceReport rep;
    rep.threshold = threshold;
    rep.t_min = grid.front();
    rep.t_max = grid.back();
    rep.grid_points = grid.size();
    for (auto& [key, g] : by_tau) {
        std::stable_sort(g.runs.begin(), g.runs.end(),
                         [&](std::size_t a, std::size_t b) { return runs[a].meta.dt > runs[b].meta.dt; });
        for (std::size_t x = 0; x < g.runs.size(); ++x)
            for (std::size_t y = x + 1; y < g.runs.size(); ++y)
                g.max_deviation = std::max(g.max_deviation, deviation(g.runs[x], g.runs[y]));
        rep.groups.push_back(g);
    }
    for (std::size_t k = 1; k < rep.groups.size(); ++k) {
        rep.inter_group_deviation.push_back(deviation(rep.groups[k - 1].runs.back(), rep.groups[k].runs.back()));
    }
    if (!rep.inter_group_deviation.empty()) {
        rep.converged = rep.inter_group_deviation.back() < threshold;
    } else if (runs.size() >= 2) {
        rep.converged = rep.groups.front().max_deviation < threshold;
    }
    return rep;
}

} // namespace quapi
