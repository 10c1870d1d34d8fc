#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "toftomo/constants.hpp"
#include "toftomo/dynamics.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/mle.hpp"
#include "test_support.hpp"

using namespace toftomo;

namespace {

MleConfig fast_cfg(int n_max) {
    MleConfig c;
    c.n_max = n_max;
    return c;
}

}  // namespace

TEST_CASE("projector structure") {
    auto s = test::rb_spec();
    QuadraturePoint q(0.8, 1.3);
    CMatrix p = projector(q, 25, s);
    double tr = p.trace().real();
    CHECK(tr > 0.0);
    CHECK((p * p - tr * p).cwiseAbs().maxCoeff() < 1e-10 * tr * tr);
    CHECK((p - p.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projector completeness") {
    auto s = test::rb_spec(9.05, 10);
    auto u = linspace(-8, 8, 1601);
    double du = u[1] - u[0];
    for (double th : {0.0, 2.2}) {
        CMatrix sum = CMatrix::Zero(11, 11);
        for (double x : u) sum += projector(QuadraturePoint(th, x), 10, s) * du * s.p0();
        CHECK((sum - CMatrix::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("predicted probability") {
    CHECK(std::abs(predicted_probability(DensityMatrix::fock(1, 26), QuadraturePoint(0.4, 0.0))) < 1e-30);
    CHECK(predicted_probability(DensityMatrix::fock(0, 26), QuadraturePoint(2.9, 0.0)) ==
          doctest::Approx(1.0 / std::sqrt(2 * constants::pi)));
    auto rho = test::random_density(26, 3, 3);
    auto u = linspace(-10, 10, 2001);
    double sum = 0;
    for (double x : u) {
        double p = predicted_probability(rho, QuadraturePoint(1.0, x));
        CHECK(p >= -1e-12);
        sum += p * 0.01;
    }
    CHECK(std::abs(sum - 1.0) < 1e-4);
}

TEST_CASE("R operator") {
    auto s = test::rb_spec();
    CMatrix full = 0.5 * test::random_density(26, 5, 3).matrix() + 0.5 * CMatrix::Identity(26, 26) / 26.0;
    DensityMatrix rho(full);
    // wide enough that even n = 25 is complete
    auto data = synthesize_dataset(rho, uniform_angles(64), linspace(-16, 16, 801));
    CMatrix r = r_operator(rho, data, s);
    CMatrix rn = r / r.trace().real() * 26.0;
    CHECK((rn - CMatrix::Identity(26, 26)).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);

    QuadratureDataset one({{0.3, 0.9, 2.5}}, 0.05);
    CMatrix r1 = r_operator(rho, one, s);
    CMatrix pi = projector(QuadraturePoint(0.3, 0.9), 25, s) * s.p0();
    double ratio = r1.trace().real() / pi.trace().real();
    CHECK((r1 - ratio * pi).cwiseAbs().maxCoeff() < 1e-12 * r1.cwiseAbs().maxCoeff());

    std::vector<QuadratureRecord> scaled = data.records();
    for (auto& rec : scaled) rec.weight *= 4.0;
    CMatrix r4 = r_operator(rho, QuadratureDataset(scaled, data.bin_width()), s);
    CHECK((r4 - r).cwiseAbs().maxCoeff() == 0.0);

    QuadratureDataset dead({{0.0, 60.0, 1.0}}, 0.05);
    CHECK_THROWS_AS(r_operator(DensityMatrix::fock(0, 26), dead, s), DegenerateInputError);
}

TEST_CASE("fixed point changes nothing") {
    auto s = test::rb_spec();
    auto rho = test::random_density(26, 8, 4);
    auto data = synthesize_dataset(rho, uniform_angles(64), linspace(-10, 10, 401));
    CMatrix r = r_operator(rho, data, s);
    auto next = DensityMatrix::normalized(r * rho.matrix() * r);
    CHECK(trace_distance(next, rho) < 1e-6);
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(QuadratureDataset({}, 0.1), DataError);
    CHECK_THROWS_AS(QuadratureDataset({{0, 0, -1.0}}, 0.1), DataError);
    CHECK_THROWS_AS(QuadratureDataset({{0, 0, 0.0}}, 0.1), DegenerateInputError);
    CHECK_THROWS_AS(QuadratureDataset({{0, 0, 1.0}}, 0.0), DataError);
    MleConfig bad;
    bad.tolerance = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    QuadratureDataset ok({{0, 0, 1.0}, {1, 0, 1.0}}, 0.1);
    CHECK(ok.distinct_angles() == 2);
    CHECK_THROWS_AS(reconstruct(ok, fast_cfg(10), test::rb_spec()), DimensionError);
}

TEST_CASE("round trip of a Fock state") {
    auto s = test::rb_spec();
    auto truth = DensityMatrix::fock(1, 26);
    auto data = synthesize_dataset(truth, uniform_angles(64), linspace(-10, 10, 201));
    MleConfig c = fast_cfg(25);
    // RρR approaches pure states slowly; the 1e-4 stopping rule halts near F = 0.9975
    c.tolerance = 1e-6;
    auto res = reconstruct(data, c, s);
    CHECK(fidelity(res.rho, truth) >= 0.999);
    for (std::size_t i = 1; i < res.log_likelihood_trace.size(); ++i)
        CHECK(res.log_likelihood_trace[i] >= res.log_likelihood_trace[i - 1] - 1e-9);
}

TEST_CASE("round trip of a displaced mixture") {
    auto s = test::rb_spec();
    TrapModel harm(s, 0.0);
    auto truth = prepare_state(MixtureSpec(0.26, 0.651, 0.089), harm, 140e-9, 1.0);
    auto data = synthesize_dataset(truth, uniform_angles(64), linspace(-10, 10, 201));
    auto res = reconstruct(data, fast_cfg(25), s);
    auto back = res.rho.transformed(displacement_matrix(-140e-9, s));
    CHECK(std::abs(back.matrix()(0, 0).real() - 0.26) < 0.02);
    CHECK(std::abs(back.matrix()(1, 1).real() - 0.651) < 0.02);
    CHECK(std::abs(back.matrix()(2, 2).real() - 0.089) < 0.02);
}

TEST_CASE("record order does not change the result") {
    auto s = test::rb_spec(9.05, 12);
    auto truth = test::random_density(13, 41, 2);
    auto data = synthesize_dataset(truth, uniform_angles(16), linspace(-8, 8, 81));
    auto recs = data.records();
    std::mt19937 g(3);
    std::shuffle(recs.begin(), recs.end(), g);
    auto a = reconstruct(data, fast_cfg(12), s);
    auto b = reconstruct(QuadratureDataset(recs, data.bin_width()), fast_cfg(12), s);
    CHECK((a.rho.matrix() - b.rho.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.iterations_used == b.iterations_used);
}

TEST_CASE("angle shift covariance") {
    auto s = test::rb_spec(9.05, 12);
    auto truth = test::random_density(13, 77, 2);
    auto angles = uniform_angles(16);
    auto u = linspace(-8, 8, 81);
    auto data = synthesize_dataset(truth, angles, u);
    const double delta = 0.37;
    std::vector<QuadratureRecord> shifted;
    for (const auto& r : data.records()) shifted.push_back({r.theta + delta, r.u, r.weight});
    MleConfig c = fast_cfg(12);
    c.tolerance = 1e-9;
    c.max_iterations = 3000;
    auto a = reconstruct(data, c, s);
    auto b = reconstruct(QuadratureDataset(shifted, data.bin_width()), c, s);
    // overlaps carry e^{+inθ}, so a shift by δ acts as e^{+iδn̂}
    auto rotated = a.rho.transformed(number_phase(13, -delta));
    CHECK(trace_distance(rotated, b.rho) < 1e-6);
}

TEST_CASE("eight angles cannot pin a fifth-order coherence") {
    // H5 = 2yH4 − 8H3, so at θ_j = 2πj/8 a Δ=5 coherence aliases onto Δ=3 terms; a mixed
    // truth leaves room for other positive states with identical data.
    auto s = test::rb_spec(9.05, 12);
    CVector v = CVector::Zero(13);
    v(0) = v(5) = 1.0 / std::sqrt(2.0);
    CMatrix m = 0.6 * v * v.adjoint();
    for (int n = 0; n < 6; ++n) m(n, n) += 0.4 / 6;
    DensityMatrix truth(m);
    auto u = linspace(-10, 10, 201);
    MleConfig c = fast_cfg(12);
    c.tolerance = 1e-6;
    c.max_iterations = 2000;
    auto few = reconstruct(synthesize_dataset(truth, uniform_angles(8), u), c, s);
    auto many = reconstruct(synthesize_dataset(truth, uniform_angles(64), u), c, s);
    CHECK(std::abs(many.rho.matrix()(0, 5) - 0.3) < 0.02);
    CHECK(std::abs(few.rho.matrix()(0, 5) - 0.3) > 0.05);
    // low-order coherences survive with eight angles
    CHECK(std::abs(few.rho.matrix()(0, 1)) < 0.02);
}

TEST_CASE("likelihood never decreases on random datasets") {
    for (int k = 0; k < 5; ++k) {
        auto s = test::rb_spec(9.05, 12);
        auto truth = test::random_density(13, 300 + k, 3);
        std::mt19937_64 g(k);
        std::uniform_real_distribution<double> jitter(0.5, 1.5);
        auto base = synthesize_dataset(truth, uniform_angles(6 + k), linspace(-8, 8, 81));
        auto recs = base.records();
        for (auto& r : recs) r.weight *= jitter(g);
        MleConfig c = fast_cfg(12);
        c.max_iterations = 200;
        auto res = reconstruct(QuadratureDataset(recs, base.bin_width()), c, s);
        for (std::size_t i = 1; i < res.log_likelihood_trace.size(); ++i)
            CHECK(res.log_likelihood_trace[i] >= res.log_likelihood_trace[i - 1] - 1e-9);
    }
}

TEST_CASE("all-ones start stays pure") {
    auto s = test::rb_spec(9.05, 8);
    auto truth = DensityMatrix::diagonal({0.5, 0.5}, 9);
    auto data = synthesize_dataset(truth, uniform_angles(16), linspace(-8, 8, 81));
    MleConfig c = fast_cfg(8);
    c.initial = InitialState::all_ones;
    c.max_iterations = 3;
    auto res = reconstruct(data, c, s);
    CHECK(res.rho.purity() > 0.999);
    auto mixed = reconstruct(data, fast_cfg(8), s);
    CHECK(fidelity(mixed.rho, truth) > 0.99);
}
