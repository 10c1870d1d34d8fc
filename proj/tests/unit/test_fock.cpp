#include <doctest.h>

#include <cmath>

#include "toftomo/constants.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/fock.hpp"
#include "test_support.hpp"

using namespace toftomo;

TEST_CASE("oscillator spec derived scales") {
    OscillatorSpec s(constants::rb87_mass, 2 * constants::pi * 9.05e3);
    CHECK(std::abs(s.x0() * s.p0() / (constants::hbar / 2) - 1.0) < 1e-12);
    CHECK_THROWS_AS(OscillatorSpec(-1.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(OscillatorSpec(1.0, 1.0, 0), ArgumentError);
}

TEST_CASE("hermite polynomials") {
    CHECK(hermite(0, 0.7) == doctest::Approx(1.0));
    CHECK(hermite(1, 1.5) == doctest::Approx(3.0));
    CHECK(hermite(2, 1.0) == doctest::Approx(2.0));
    // H_3 = 8x³ − 12x
    CHECK(hermite(3, 0.3) == doctest::Approx(8 * 0.027 - 3.6));
    CHECK_THROWS_AS(hermite(-1, 0.0), ArgumentError);
}

TEST_CASE("hermite functions agree with the polynomial form") {
    for (int n = 0; n <= 12; ++n) {
        for (double u : {-3.1, -0.4, 0.0, 1.7, 5.2}) {
            double direct = std::pow(2 * constants::pi, -0.25) * hermite(n, u / std::sqrt(2.0)) *
                            std::exp(-u * u / 4) / std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0));
            CHECK(hermite_functions(12, u)(n) == doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("quadrature overlap") {
    OscillatorSpec s = test::rb_spec();
    auto o0 = quadrature_overlap(0, QuadraturePoint(0.0, 0.0), s);
    CHECK(std::norm(o0) == doctest::Approx(1.0 / std::sqrt(2 * constants::pi * s.p0() * s.p0())));
    CHECK(std::abs(quadrature_overlap(1, QuadraturePoint(1.3, 0.0), s)) < 1e-30);
    for (int n = 0; n < 6; ++n) {
        auto a = quadrature_overlap(n, QuadraturePoint(2 * constants::pi, 0.8), s);
        auto b = quadrature_overlap(n, QuadraturePoint(0.0, 0.8), s);
        CHECK(std::abs(a - b) < 1e-12 * std::abs(b) + 1e-300);
    }
    CHECK_THROWS_AS(quadrature_overlap(26, QuadraturePoint(0, 0), s), ArgumentError);
}

TEST_CASE("overlap normalization") {
    OscillatorSpec s = test::rb_spec();
    // Fock states above n = 7 carry more than 1e-6 of their weight outside ±8 p0.
    auto check = [&](double half, int n_hi) {
        auto u = linspace(-half, half, static_cast<int>(200 * half) + 1);
        double du = u[1] - u[0];
        for (double theta : {0.0, 0.9, 4.0}) {
            for (int n = 0; n <= n_hi; ++n) {
                double sum = 0;
                for (double x : u) sum += std::norm(quadrature_overlap(n, QuadraturePoint(theta, x), s)) * du * s.p0();
                CHECK(std::abs(sum - 1.0) < 1e-6);
            }
        }
    };
    check(8.0, 7);
    check(16.0, 25);
}

TEST_CASE("closed-form 2-D Fock momentum densities") {
    double p0x = 2.0, p0y = 1.5;
    CHECK(fock_momentum_density_2d(1, 0, 0, p0x, p0y) == 0.0);
    // ridge maximum of n=1 along p_y = 0 at ±√2 p0x
    double pk = std::sqrt(2.0) * p0x;
    double f = fock_momentum_density_2d(1, pk, 0, p0x, p0y);
    CHECK(f > fock_momentum_density_2d(1, pk * 1.001, 0, p0x, p0y));
    CHECK(f > fock_momentum_density_2d(1, pk * 0.999, 0, p0x, p0y));
    for (int n = 0; n < 3; ++n) {
        double sum = 0;
        double h = 0.02;
        for (double px = -12 * p0x; px <= 12 * p0x; px += h * p0x)
            for (double py = -12 * p0y; py <= 12 * p0y; py += h * p0y)
                sum += fock_momentum_density_2d(n, px, py, p0x, p0y) * h * h * p0x * p0y;
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    CHECK_THROWS_AS(fock_momentum_density_2d(3, 0, 0, 1, 1), UnsupportedStateError);
}

TEST_CASE("displacement operator") {
    OscillatorSpec s = test::rb_spec();
    CHECK((displacement_matrix(0.0, s) - CMatrix::Identity(26, 26)).norm() < 1e-14);
    DensityMatrix vac = DensityMatrix::fock(0, 26);
    DensityMatrix moved = vac.transformed(displacement_matrix(s.x0(), s));
    double mean_x = (moved.matrix() * position_operator(26)).trace().real() * s.x0();
    CHECK(std::abs(mean_x - s.x0()) < 1e-6 * s.x0());
    double mean_n = 0;
    for (int n = 0; n < 26; ++n) mean_n += n * moved.matrix()(n, n).real();
    CHECK(mean_n == doctest::Approx(0.25).epsilon(1e-6));
    CMatrix round = displacement_matrix(s.x0(), s) * displacement_matrix(-s.x0(), s);
    CHECK((round - CMatrix::Identity(26, 26)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(displacement_matrix(14 * s.x0(), s), TruncationError);
    try {
        displacement_matrix(14 * s.x0(), s);
    } catch (const TruncationError& e) {
        CHECK(e.leakage() > 0.1);
    }
}

TEST_CASE("squeeze from a depth jump") {
    OscillatorSpec s = test::rb_spec();
    CHECK((squeeze_from_depth_jump(1.0, s) - CMatrix::Identity(26, 26)).norm() < 1e-14);
    CHECK(squeeze_parameter(2.0) == doctest::Approx(std::log(2.0) / 4));
    // ω₂ = 2ω₁ is a fourfold depth jump
    DensityMatrix sq = DensityMatrix::fock(0, 26).transformed(squeeze_from_depth_jump(4.0, s));
    double mean_n = 0;
    for (int n = 0; n < 26; ++n) mean_n += n * sq.matrix()(n, n).real();
    CHECK(std::abs(mean_n - std::pow(std::sinh(std::log(4.0) / 4), 2)) < 1e-6);
    // old vacuum is broader in x/x0 by √(ω₂/ω₁)
    CMatrix x = position_operator(26);
    double vx = (sq.matrix() * x * x).trace().real();
    CHECK(vx == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("trace distance and fidelity") {
    auto r0 = DensityMatrix::fock(0, 4);
    auto r1 = DensityMatrix::fock(1, 4);
    auto half = DensityMatrix::diagonal({0.5, 0.5}, 4);
    CHECK(trace_distance(r0, r0) < 1e-15);
    CHECK(trace_distance(r0, r1) == doctest::Approx(1.0));
    CHECK(trace_distance(r0, half) == doctest::Approx(0.5));
    CHECK(fidelity(r0, r0) == doctest::Approx(1.0));
    CHECK(fidelity(r0, r1) < 1e-12);
    CHECK(fidelity(r0, half) == doctest::Approx(0.5));
    CHECK_THROWS_AS(fidelity(r0, DensityMatrix::fock(0, 5)), DimensionError);
    CHECK_THROWS_AS(trace_distance(r0, DensityMatrix::fock(0, 5)), DimensionError);
}

TEST_CASE("metric relations on random states") {
    for (int i = 0; i < 30; ++i) {
        auto a = test::random_density(6, 100 + i, 1 + i % 6);
        auto b = test::random_density(6, 500 + i, 1 + (i / 2) % 6);
        double f = fidelity(a, b);
        double t = trace_distance(a, b);
        CHECK(std::abs(f - fidelity(b, a)) < 1e-8);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        CHECK(t <= 1.0 + 1e-10);
        CHECK(1.0 - std::sqrt(f) <= t + 1e-8);
        CHECK(1.0 - f <= t + 1e-8);
        CHECK(t <= std::sqrt(1.0 - f * f) + 1e-8);
        CHECK(t <= std::sqrt(1.0 - f) + 1e-8);
        CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(trace_distance(a, a) < 1e-6);
    }
}

TEST_CASE("density matrix validation") {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 0.5;
    CHECK_THROWS_AS(DensityMatrix{m}, ArgumentError);
    m(1, 1) = 0.5;
    m(0, 1) = 0.1;
    CHECK_THROWS_AS(DensityMatrix{m}, ArgumentError);
    m(0, 0) = 1.2;
    m(1, 1) = -0.2;
    m(0, 1) = 0.0;
    CHECK_THROWS_AS(DensityMatrix{m}, ArgumentError);
}

TEST_CASE("wigner anchors") {
    auto ax = linspace(-6, 6, 121);
    auto w1 = wigner(DensityMatrix::fock(1, 26), ax, ax);
    CHECK(w1.values(60, 60) == doctest::Approx(-1.0 / constants::pi).epsilon(1e-12));
    auto w0 = wigner(DensityMatrix::fock(0, 26), ax, ax);
    CHECK(w0.values(60, 60) == doctest::Approx(1.0 / constants::pi).epsilon(1e-12));
    CHECK(std::abs(w0.integral() - 1.0) < 2e-2);
    CHECK(negativity(w0).value >= 0.0);
    CHECK_FALSE(negativity(w0).negative);
    CHECK(negativity(w1).value == doctest::Approx(-0.3183).epsilon(1e-4));
    CHECK(negativity(w1).negative);
    for (int i = 0; i < 5; ++i) {
        auto rho = test::random_density(26, 900 + i, 4);
        auto w = wigner(rho, ax, ax);
        CHECK(std::abs(w.integral() - 1.0) < 2e-2);
        CHECK(w.max_imag_residue < 1e-10);
        CHECK(w.values.minCoeff() >= -1.0 / constants::pi - 1e-6);
    }
}

TEST_CASE("wigner of a coherent state is a displaced gaussian") {
    OscillatorSpec s = test::rb_spec();
    auto rho = DensityMatrix::fock(0, 26).transformed(displacement_matrix(1.5 * s.x0(), s));
    for (double x : {0.0, 1.5, 2.2}) {
        for (double p : {-0.5, 0.0, 0.7}) {
            double expect = std::exp(-((x - 1.5) * (x - 1.5) + p * p) / 2) / constants::pi;
            CHECK(wigner_at(rho, x, p) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("wigner negativity of the fitted mixture") {
    // Independent dense evaluation from closed-form Laguerre polynomials on the same 241² grid.
    const double oracle = -0.0961295856275048;
    auto ax = linspace(-6, 6, 241);
    auto rho = DensityMatrix::diagonal({0.26, 0.651, 0.089}, 26);
    auto n = negativity(wigner(rho, ax, ax));
    CHECK(n.value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(wigner_minimum(rho).value == doctest::Approx(oracle).epsilon(1e-9));
}
