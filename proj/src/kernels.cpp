// kernels.cpp: eta coefficient tables and pairwise influence factors

#include "quapi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "quapi/errors.hpp"

namespace quapi {

void ThermalBath::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ValidationError("bath: temperature must be finite and > 0");
    }
}

double thermal_weight(const ThermalBath& bath, double omega) {
    if (omega == 0.0) throw ValidationError("thermal_weight: F(w) is singular at w = 0");
    // exp(x)/sinh(x) with x = beta w / 2, written to stay finite for large |x|.
    const double bose = -2.0 / std::expm1(-bath.beta() * omega);
    return bath.spectral(omega) * bose / (omega * omega);
}

const char* to_string(EtaPattern p) {
    return p == EtaPattern::HalfStepTerminated ? "half_step_terminated" : "uniform";
}

namespace {

using Integrand = std::function<Complex(double)>;

Complex integrate_bath(const ThermalBath& bath, const Integrand& f, double rate, const QuadratureConfig& q) {
    const double limit = bath.spectral.integration_limit(q.omega_max_multiple);
    double width = std::min(bath.spectral.cutoff_scale(), limit / 8.0);
    if (rate > 0.0) width = std::min(width, M_PI / rate);

    if (const auto* tab = std::get_if<Tabulated>(&bath.spectral.kind())) {
        // Integrate sample interval by sample interval so that interpolation kinks
        // fall on panel boundaries.
        Complex total = 0.0;
        double lo = 0.0;
        for (double hi : tab->omega) {
            total += integrate_adaptive(f, lo, hi, width, q).value;
            lo = hi;
        }
        return total;
    }
    return integrate_adaptive(f, 0.0, limit, width, q).value;
}

double coth(double x) { return 1.0 / std::tanh(x); }

} // namespace

Complex correlation_integral(const ThermalBath& bath, double a, double b, double tau, const QuadratureConfig& q) {
    if (bath.spectral.is_zero()) return 0.0;
    const double half_beta = 0.5 * bath.beta();
    auto f = [&](double w) -> Complex {
        const double weight = bath.spectral(w) / (w * w) * 4.0 * std::sin(w * a) * std::sin(w * b);
        return weight * Complex(coth(half_beta * w) * std::cos(w * tau), -std::sin(w * tau));
    };
    return integrate_bath(bath, f, std::abs(tau) + 2.0 * std::max(std::abs(a), std::abs(b)), q);
}

Complex self_correlation_integral(const ThermalBath& bath, double h, const QuadratureConfig& q) {
    if (bath.spectral.is_zero()) return 0.0;
    const double half_beta = 0.5 * bath.beta();
    auto f = [&](double w) -> Complex {
        const double g = bath.spectral(w) / (w * w);
        const double s = std::sin(0.5 * w * h);
        return g * Complex(2.0 * coth(half_beta * w) * s * s, std::sin(w * h));
    };
    return integrate_bath(bath, f, h, q);
}

double dephasing_exponent_integral(const ThermalBath& bath, double t, const QuadratureConfig& q) {
    if (bath.spectral.is_zero() || t == 0.0) return 0.0;
    const double half_beta = 0.5 * bath.beta();
    auto f = [&](double w) -> Complex {
        const double s = std::sin(0.5 * w * t);
        return bath.spectral(w) / (w * w) * coth(half_beta * w) * 2.0 * s * s;
    };
    return integrate_bath(bath, f, std::abs(t), q).real();
}

// --------------------------- tables -------------------------------------------

namespace {

enum class Slot { Interior, FirstColumn, LastRow, Corner, EndDiagonal };

struct Entry {
    Slot slot;
    int k;
};

void evaluate_entries(const std::vector<Entry>& entries, std::vector<Complex>& out, const ThermalBath& bath,
                      double dt, int n_slices, const QuadratureConfig& q, int workers) {
    out.assign(entries.size(), 0.0);
    std::exception_ptr failure;
    const long count = static_cast<long>(entries.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long i = 0; i < count; ++i) {
        try {
            const Entry e = entries[static_cast<std::size_t>(i)];
            Complex v;
            switch (e.slot) {
            case Slot::Interior:
                v = e.k == 0 ? self_correlation_integral(bath, dt, q)
                             : correlation_integral(bath, 0.5 * dt, 0.5 * dt, e.k * dt, q);
                break;
            case Slot::FirstColumn:
            case Slot::LastRow:
                v = correlation_integral(bath, 0.25 * dt, 0.5 * dt, e.k * dt - 0.25 * dt, q);
                break;
            case Slot::Corner:
                v = correlation_integral(bath, 0.25 * dt, 0.25 * dt, n_slices * dt - 0.5 * dt, q);
                break;
            case Slot::EndDiagonal:
                v = self_correlation_integral(bath, 0.5 * dt, q);
                break;
            }
            out[static_cast<std::size_t>(i)] = v;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void validate_table_args(const ThermalBath& bath, double dt, int last, const QuadratureConfig& q) {
    bath.validate();
    q.validate();
    if (!(dt > 0.0)) throw ValidationError("eta table: dt must be > 0");
    if (last < 1) throw ValidationError("eta table: need at least one slice");
}

} // namespace

EtaTable eta_table_full(const ThermalBath& bath, double dt, int n_slices, const QuadratureConfig& q,
                        int max_separation, int workers) {
    validate_table_args(bath, dt, n_slices, q);
    const int cap = max_separation < 0 ? n_slices : std::min(max_separation, n_slices);

    EtaTable t;
    t.pattern_ = EtaPattern::HalfStepTerminated;
    t.last_ = n_slices;
    t.dt_ = dt;
    t.max_sep_ = cap;
    t.has_corner_ = n_slices <= cap;

    std::vector<Entry> entries;
    const int interior_max = std::min(n_slices - 2, cap); // separations inside (0, N)
    for (int k = 0; k <= interior_max; ++k) entries.push_back({Slot::Interior, k});
    const int edge_max = std::min(n_slices - 1, cap);
    for (int k = 1; k <= edge_max; ++k) entries.push_back({Slot::FirstColumn, k});
    for (int k = 1; k <= edge_max; ++k) entries.push_back({Slot::LastRow, k});
    if (t.has_corner_) entries.push_back({Slot::Corner, n_slices});
    entries.push_back({Slot::EndDiagonal, 0});

    std::vector<Complex> values;
    evaluate_entries(entries, values, bath, dt, n_slices, q, workers);

    t.interior_.assign(static_cast<std::size_t>(std::max(interior_max + 1, 0)), 0.0);
    t.first_column_.assign(static_cast<std::size_t>(edge_max + 1), 0.0);
    t.last_row_.assign(static_cast<std::size_t>(edge_max + 1), 0.0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto k = static_cast<std::size_t>(entries[i].k);
        switch (entries[i].slot) {
        case Slot::Interior: t.interior_[k] = values[i]; break;
        case Slot::FirstColumn: t.first_column_[k] = values[i]; break;
        case Slot::LastRow: t.last_row_[k] = values[i]; break;
        case Slot::Corner: t.corner_ = values[i]; break;
        case Slot::EndDiagonal: t.end_diagonal_ = values[i]; break;
        }
    }
    return t;
}

EtaTable eta_table_uniform(const ThermalBath& bath, double dt, int last_index, const QuadratureConfig& q,
                           int max_separation, int workers) {
    validate_table_args(bath, dt, last_index, q);
    const int cap = max_separation < 0 ? last_index : std::min(max_separation, last_index);

    EtaTable t;
    t.pattern_ = EtaPattern::Uniform;
    t.last_ = last_index;
    t.dt_ = dt;
    t.max_sep_ = cap;

    std::vector<Entry> entries;
    for (int k = 0; k <= cap; ++k) entries.push_back({Slot::Interior, k});
    evaluate_entries(entries, t.interior_, bath, dt, last_index, q, workers);
    return t;
}

void EtaTable::missing(int j, int jp) const {
    std::ostringstream os;
    os << "eta table (" << to_string(pattern_) << ", last index " << last_ << ", max separation " << max_sep_
       << ") has no entry (" << j << ", " << jp << ")";
    throw std::out_of_range(os.str());
}

bool EtaTable::has(int j, int jp) const {
    if (jp < 0 || jp > j || j > last_) return false;
    const int k = j - jp;
    if (pattern_ == EtaPattern::Uniform) return k <= max_sep_;
    if (j == jp) return (j == 0 || j == last_) ? true : k < static_cast<int>(interior_.size());
    if (jp == 0 && j == last_) return has_corner_;
    if (jp == 0) return j < static_cast<int>(first_column_.size());
    if (j == last_) return k < static_cast<int>(last_row_.size());
    return k < static_cast<int>(interior_.size());
}

Complex EtaTable::operator()(int j, int jp) const {
    if (!has(j, jp)) missing(j, jp);
    const int k = j - jp;
    if (pattern_ == EtaPattern::Uniform) return interior_[static_cast<std::size_t>(k)];
    if (j == jp) return (j == 0 || j == last_) ? end_diagonal_ : interior_[0];
    if (jp == 0) return j == last_ ? corner_ : first_column_[static_cast<std::size_t>(j)];
    if (j == last_) return last_row_[static_cast<std::size_t>(k)];
    return interior_[static_cast<std::size_t>(k)];
}

Complex EtaTable::separation(int k) const {
    if (k < 0 || k >= static_cast<int>(interior_.size())) missing(k, 0);
    return interior_[static_cast<std::size_t>(k)];
}

Complex EtaTable::first_column(int j) const {
    if (pattern_ != EtaPattern::HalfStepTerminated || j < 1 || j >= static_cast<int>(first_column_.size())) {
        missing(j, 0);
    }
    return first_column_[static_cast<std::size_t>(j)];
}

Complex EtaTable::last_row(int k) const {
    if (pattern_ != EtaPattern::HalfStepTerminated || k < 1 || k >= static_cast<int>(last_row_.size())) {
        missing(last_, last_ - k);
    }
    return last_row_[static_cast<std::size_t>(k)];
}

Complex EtaTable::corner() const {
    if (pattern_ != EtaPattern::HalfStepTerminated || !has_corner_) missing(last_, 0);
    return corner_;
}

Complex EtaTable::end_diagonal() const {
    if (pattern_ != EtaPattern::HalfStepTerminated) missing(0, 0);
    return end_diagonal_;
}

Complex pair_influence(Complex eta, double later_plus, double later_minus, double earlier_plus,
                       double earlier_minus) {
    if (later_plus == later_minus) return 1.0;
    return std::exp(-(later_plus - later_minus) * (eta * earlier_plus - std::conj(eta) * earlier_minus));
}

void write_eta_csv(std::ostream& os, const EtaTable& table) {
    const auto flags = os.flags();
    const auto precision = os.precision();
    os << "pattern,j,jprime,re,im\n";
    os << std::setprecision(17);
    for (int j = 0; j <= table.last_index(); ++j) {
        for (int jp = 0; jp <= j; ++jp) {
            if (!table.has(j, jp)) continue;
            const Complex v = table(j, jp);
            os << to_string(table.pattern()) << ',' << j << ',' << jp << ',' << v.real() << ',' << v.imag() << '\n';
        }
    }
    os.flags(flags);
    os.precision(precision);
}

} // namespace quapi
