#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "quapi/errors.hpp"
#include "quapi/kernels.hpp"
#include "quapi/quadrature.hpp"

using namespace quapi;

namespace {

const oracle::OhmicBath kRef{0.0625, 10.0, 0.2};

ThermalBath bath(const oracle::OhmicBath& b) { return {SpectralDensity(Ohmic{b.gamma, b.omega_c}), b.temperature}; }

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("thermal weight at omega = Delta") {
    const ThermalBath b = bath(kRef);
    const double expected = 0.0625 / M_PI * std::exp(-0.1) * std::exp(2.5) / std::sinh(2.5);
    CHECK(thermal_weight(b, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(thermal_weight(b, 0.0), ValidationError);
    const ThermalBath off{SpectralDensity(Ohmic{0.0, 10.0}), 0.2};
    CHECK(thermal_weight(off, 0.7) == 0.0);
    CHECK(thermal_weight(off, -0.7) == 0.0);
}

TEST_CASE("thermal weight obeys detailed balance") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.01, 30.0);
    for (double temperature : {0.2, 2.0}) {
        const ThermalBath b{SpectralDensity(Ohmic{0.0625, 10.0}), temperature};
        for (int i = 0; i < 50; ++i) {
            const double w = u(rng);
            const double lhs = thermal_weight(b, -w) * std::exp(w / temperature);
            CHECK(std::abs(lhs - thermal_weight(b, w)) <= 1e-12 * std::abs(thermal_weight(b, w)));
        }
    }
}

TEST_CASE("adaptive quadrature") {
    const QuadratureConfig q;
    const auto r = integrate_adaptive([](double x) { return Complex(std::cos(x), std::exp(-x)); }, 0.0, 10.0, 1.0, q);
    CHECK(std::abs(r.value - Complex(std::sin(10.0), 1.0 - std::exp(-10.0))) < 1e-12);
    QuadratureConfig bad;
    bad.relative_tolerance = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("zero coupling gives vanishing coefficients") {
    const ThermalBath b{SpectralDensity(Ohmic{0.0, 10.0}), 0.2};
    const EtaTable full = eta_table_full(b, 0.3, 5);
    for (int j = 0; j <= 5; ++j)
        for (int jp = 0; jp <= j; ++jp) CHECK(full(j, jp) == Complex(0.0));
    const EtaTable uni = eta_table_uniform(b, 0.3, 4);
    for (int j = 0; j <= 4; ++j)
        for (int jp = 0; jp <= j; ++jp) CHECK(uni(j, jp) == Complex(0.0));
}

TEST_CASE("interior coefficient at separation 2 matches the literal integrand") {
    const EtaTable t = eta_table_full(bath(kRef), 0.3, 6);
    CHECK(rel(t(4, 2), oracle::interior(kRef, 0.3, 2)) < 1e-8);
}

TEST_CASE("every off-diagonal entry matches the literal integrands") {
    const double dt = 0.3;
    const int n = 6;
    const EtaTable t = eta_table_full(bath(kRef), dt, n);
    for (int k = 1; k < n - 1; ++k) CHECK(rel(t.separation(k), oracle::interior(kRef, dt, k)) < 1e-8);
    for (int j = 1; j < n; ++j) CHECK(rel(t.first_column(j), oracle::first_column(kRef, dt, j)) < 1e-8);
    for (int j = 1; j < n; ++j) CHECK(rel(t(n, j), oracle::last_row(kRef, dt, n, j)) < 1e-8);
    CHECK(rel(t.corner(), oracle::corner(kRef, dt, n)) < 1e-8);
}

TEST_CASE("diagonal entries match the regularized form") {
    const double dt = 0.3;
    const EtaTable full = eta_table_full(bath(kRef), dt, 4);
    CHECK(rel(full.separation(0), oracle::diagonal(kRef, dt)) < 1e-8);
    CHECK(rel(full.end_diagonal(), oracle::diagonal(kRef, dt / 2)) < 1e-8);
    const EtaTable uni = eta_table_uniform(bath(kRef), dt, 3);
    CHECK(rel(uni(2, 2), oracle::diagonal(kRef, dt)) < 1e-8);
}

TEST_CASE("uniform off-diagonals equal the interior half-step entries") {
    const double dt = 0.45;
    const EtaTable full = eta_table_full(bath(kRef), dt, 8);
    const EtaTable uni = eta_table_uniform(bath(kRef), dt, 7);
    for (int k = 1; k <= 6; ++k) CHECK(rel(uni.separation(k), full.separation(k)) < 1e-10);
    // translation invariance is structural
    for (int j = 1; j <= 7; ++j)
        for (int jp = 0; jp < j; ++jp) CHECK(uni(j, jp) == uni.separation(j - jp));
}

TEST_CASE("random entries agree with per-entry quadrature") {
    const double dt = 0.2;
    const int n = 12;
    const EtaTable t = eta_table_full(bath(kRef), dt, n);
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> pick(1, n - 1);
    for (int rep = 0; rep < 5; ++rep) {
        int j = pick(rng), jp = pick(rng);
        if (j == jp) continue;
        if (j < jp) std::swap(j, jp);
        CHECK(rel(t(j, jp), oracle::interior(kRef, dt, j - jp)) < 1e-8);
    }
}

TEST_CASE("coefficients are linear in the coupling") {
    const ThermalBath b = bath(kRef);
    ThermalBath b2 = b;
    b2.spectral = b.spectral.scaled(2.0);
    const EtaTable t1 = eta_table_full(b, 0.3, 5);
    const EtaTable t2 = eta_table_full(b2, 0.3, 5);
    for (int j = 0; j <= 5; ++j)
        for (int jp = 0; jp <= j; ++jp) CHECK(std::abs(t2(j, jp) - 2.0 * t1(j, jp)) <= 1e-12 * std::abs(t2(j, jp)));
}

TEST_CASE("truncated tables only hold the requested separations") {
    const EtaTable t = eta_table_full(bath(kRef), 0.3, 10, {}, 3);
    CHECK(t.has(5, 2));
    CHECK_FALSE(t.has(6, 2));
    CHECK(t.has(10, 7));
    CHECK_THROWS(t(6, 1));
}

TEST_CASE("workers do not change table entries") {
    const EtaTable a = eta_table_full(bath(kRef), 0.3, 8, {}, -1, 1);
    const EtaTable b = eta_table_full(bath(kRef), 0.3, 8, {}, -1, 3);
    for (int j = 0; j <= 8; ++j)
        for (int jp = 0; jp <= j; ++jp) CHECK(a(j, jp) == b(j, jp));
}

TEST_CASE("pair influence") {
    CHECK(pair_influence(Complex(0.3, 0.2), 1.0, 1.0, 1.0, -1.0) == Complex(1.0));
    CHECK(pair_influence(Complex(0.0), 1.0, -1.0, 1.0, -1.0) == Complex(1.0));
    const Complex eta(0.1, 0.05);
    const Complex expected = std::exp(Complex(-0.4, 0.0));
    CHECK(std::abs(pair_influence(eta, 1.0, -1.0, 1.0, -1.0) - expected) < 1e-15);
    // same value written out independently
    const Complex direct = std::exp(-(1.0 - -1.0) * (eta * 1.0 - std::conj(eta) * -1.0));
    CHECK(std::abs(direct - expected) < 1e-15);
}

TEST_CASE("diagonal influence factors never amplify") {
    const EtaTable t = eta_table_full(bath(kRef), 0.3, 4);
    for (Complex eta : {t.separation(0), t.end_diagonal()}) {
        REQUIRE(eta.real() > 0.0);
        for (double lp : {1.0, -1.0})
            for (double lm : {1.0, -1.0}) CHECK(std::abs(pair_influence(eta, lp, lm, lp, lm)) <= 1.0 + 1e-15);
    }
}

TEST_CASE("eta CSV dump") {
    const EtaTable t = eta_table_uniform(bath(kRef), 0.3, 2);
    std::ostringstream os;
    write_eta_csv(os, t);
    std::istringstream is(os.str());
    std::string header, line;
    std::getline(is, header);
    CHECK(header == "pattern,j,jprime,re,im");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 6);
}

}
