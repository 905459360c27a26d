// quadrature.cpp: Panel Gauss-Legendre with bisection refinement

#include "quapi/quadrature.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "quapi/errors.hpp"

namespace quapi {

void QuadratureConfig::validate() const {
    if (!(relative_tolerance > 0.0)) throw ValidationError("quadrature: relative tolerance must be > 0");
    if (!(absolute_tolerance > 0.0)) throw ValidationError("quadrature: absolute tolerance must be > 0");
    if (!(omega_max_multiple >= 10.0)) throw ValidationError("quadrature: omega_max multiple must be >= 10");
}

namespace {

constexpr int kOrder = 20;
constexpr int kMaxDepth = 40;

struct GaussLegendre {
    std::array<double, kOrder> nodes{};
    std::array<double, kOrder> weights{};

    GaussLegendre() {
        for (int i = 0; i < kOrder; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (kOrder + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= kOrder; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const GaussLegendre& rule() {
    static const GaussLegendre gl;
    return gl;
}

using Integrand = std::function<std::complex<double>(double)>;

std::complex<double> panel(const Integrand& f, double a, double b, long& evals) {
    const auto& gl = rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::complex<double> sum = 0.0;
    for (int i = 0; i < kOrder; ++i) sum += gl.weights[i] * f(mid + half * gl.nodes[i]);
    evals += kOrder;
    return sum * half;
}

struct Refined {
    std::complex<double> value;
    double error;
};

Refined refine(const Integrand& f, double a, double b, std::complex<double> coarse, double tol, int depth,
               long& evals) {
    const double mid = 0.5 * (a + b);
    const auto left = panel(f, a, mid, evals);
    const auto right = panel(f, mid, b, evals);
    const double err = std::abs(coarse - (left + right));
    if (err <= tol || depth >= kMaxDepth) return {left + right, err};
    const auto l = refine(f, a, mid, left, 0.5 * tol, depth + 1, evals);
    const auto r = refine(f, mid, b, right, 0.5 * tol, depth + 1, evals);
    return {l.value + r.value, l.error + r.error};
}

} // namespace

QuadratureResult integrate_adaptive(const Integrand& f, double a, double b, double max_panel,
                                    const QuadratureConfig& cfg) {
    QuadratureResult result;
    if (b <= a) return result;
    const long n_panels = std::max(1L, static_cast<long>(std::ceil((b - a) / max_panel)));
    const double width = (b - a) / static_cast<double>(n_panels);

    std::vector<std::complex<double>> coarse(static_cast<std::size_t>(n_panels));
    std::complex<double> estimate = 0.0;
    double magnitude = 0.0;
    for (long p = 0; p < n_panels; ++p) {
        const double lo = a + width * p;
        const double hi = p + 1 == n_panels ? b : lo + width;
        coarse[static_cast<std::size_t>(p)] = panel(f, lo, hi, result.evaluations);
        estimate += coarse[static_cast<std::size_t>(p)];
        magnitude += std::abs(coarse[static_cast<std::size_t>(p)]);
    }
    // Oscillatory integrands can cancel to far below the panel magnitudes; bound the
    // target from below by a fraction of the absolute panel sum as well.
    const double target = std::max({cfg.absolute_tolerance, cfg.relative_tolerance * std::abs(estimate),
                                    1e-3 * cfg.relative_tolerance * magnitude});

    for (long p = 0; p < n_panels; ++p) {
        const double lo = a + width * p;
        const double hi = p + 1 == n_panels ? b : lo + width;
        const auto r = refine(f, lo, hi, coarse[static_cast<std::size_t>(p)], target * (hi - lo) / (b - a), 0,
                              result.evaluations);
        result.value += r.value;
        result.error_estimate += r.error;
    }
    if (!(result.error_estimate <= target) || !std::isfinite(std::abs(result.value))) {
        std::ostringstream os;
        os << "quadrature did not converge on [" << a << ", " << b << "]: error estimate "
           << result.error_estimate << " > target " << target;
        throw NumericalError(os.str(), result.error_estimate);
    }
    return result;
}

} // namespace quapi
