#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fblab/minimize.hpp"
#include "fblab/profiles.hpp"

using namespace fbl;

namespace {

struct OneD {
    double slope;
    double fb; // free boundary location
};

OneD measure_1d(const ScalarField& u) {
    const Grid& g = u.grid;
    int fb = -g.extent;
    for (int i = -g.extent; i <= g.extent; ++i)
        if (u.at(i) <= 0.0) fb = i;
    double slope = (u.at(g.extent) - u.at(fb)) / (1.0 - fb * g.h());
    return {slope, fb * g.h()};
}

} // namespace

TEST_CASE("zero boundary data minimizes to zero") {
    for (int dim : {1, 2}) {
        Grid g(dim, 16);
        ScalarField zero(g);
        MinimizeReport rep = minimize_jp(zero, Ball{{0.0, 0.0}, 0.9}, 2.0);
        for (double v : rep.u.values) CHECK(v == 0.0);
        CHECK(rep.final_energy == 0.0);
    }
}

TEST_CASE("negative boundary data is rejected") {
    Grid g(1, 16);
    ScalarField b(g);
    b.at(-16) = -0.5;
    CHECK_THROWS_AS(minimize_jp(b, Ball{{0.0, 0.0}, 0.9}, 2.0), NegativeBoundary);
    CHECK_THROWS_AS(minimize_jp(ScalarField(g), Ball{{0.0, 0.0}, 0.9}, 1.0),
                    InvalidExponent);
}

TEST_CASE("1D closed form: slope and free boundary location") {
    const double A = 0.5;
    for (double p : {2.0, 3.0}) {
        Grid g(1, 128);
        ScalarField bdry = make_profile(g, "affine:A=0.5");
        MinimizeReport rep = minimize_jp(bdry, Ball{{0.0, 0.0}, 1.0}, p);
        OneD m = measure_1d(rep.u);
        double mstar = std::pow(p - 1.0, -1.0 / p);
        double sstar = 1.0 - A * std::pow(p - 1.0, 1.0 / p);
        CHECK(m.slope == doctest::Approx(mstar).epsilon(0.02));
        CHECK(std::abs(m.fb - sstar) <= 2.0 * g.h() + 1e-12);

        // the recorded energy trace is non-increasing
        for (size_t k = 1; k < rep.energy_trace.size(); ++k)
            CHECK(rep.energy_trace[k] <= rep.energy_trace[k - 1] + 1e-12);
    }
}

TEST_CASE("saturation: large boundary values keep everything positive") {
    Grid g(1, 64);
    double A = 2.5; // affine slope A/2 exceeds the optimal (p-1)^{-1/p}
    ScalarField bdry = make_profile(g, "affine:A=2.5");
    MinimizeReport rep = minimize_jp(bdry, Ball{{0.0, 0.0}, 1.0}, 2.0);
    for (int i = -63; i <= 63; ++i) {
        CHECK(rep.u.at(i) > 0.0);
        CHECK(rep.u.at(i) ==
              doctest::Approx(A * (i * g.h() + 1.0) * 0.5).epsilon(1e-6));
    }
}

TEST_CASE("phi shapes") {
    PhiSpec clamp{PhiShape::Clamp, 1.0};
    CHECK(phi(clamp, -0.3) == 0.0);
    CHECK(phi(clamp, 0.4) == doctest::Approx(0.4));
    CHECK(phi(clamp, 2.0) == 1.0);
    PhiSpec smooth{PhiShape::Smoothstep, 1.0};
    CHECK(phi(smooth, -1.0) == 0.0);
    CHECK(phi(smooth, 0.5) == doctest::Approx(0.5));
    CHECK(phi(smooth, 1.5) == 1.0);
    CHECK(phi_prime(smooth, 0.5) == doctest::Approx(1.5));
    PhiSpec zero{PhiShape::Zero, 1.0};
    CHECK(phi(zero, 5.0) == 0.0);
}

TEST_CASE("nonlocal generator with Phi = 0 reduces to minimize_jp") {
    Grid g(1, 64);
    ScalarField bdry = make_profile(g, "affine:A=0.5");
    Ball B{{0.0, 0.0}, 1.0};
    auto [rep, params] =
        make_nonlocal_almost_minimizer(bdry, B, 2.0, PhiSpec{PhiShape::Zero, 1.0});
    MinimizeReport plain = minimize_jp(bdry, B, 2.0);
    for (size_t n = 0; n < plain.u.values.size(); ++n)
        CHECK(rep.u.values[n] == plain.u.values[n]);
    CHECK(params.kappa == doctest::Approx(2.0)); // vol(B_1) in 1D
    CHECK(params.beta == doctest::Approx(1.0));
}

TEST_CASE("nonlocal generator: zero boundary stays zero") {
    Grid g(1, 32);
    auto [rep, params] = make_nonlocal_almost_minimizer(
        ScalarField(g), Ball{{0.0, 0.0}, 1.0}, 2.0, PhiSpec{PhiShape::Clamp, 1.0});
    (void)params;
    for (double v : rep.u.values) CHECK(v == 0.0);
}

TEST_CASE("verify_almost_min accepts minimizers with kappa = 0") {
    Grid g(1, 64);
    ScalarField bdry = make_profile(g, "affine:A=0.5");
    MinimizeReport rep = minimize_jp(bdry, Ball{{0.0, 0.0}, 1.0}, 2.0);
    AlmostMinReport rv = verify_almost_min(rep.u, {0.0, 1.0}, 2.0, 15, 42);
    CHECK(rv.pass);
    for (const BallCheck& c : rv.balls) CHECK(c.ratio <= c.allowed);
}

TEST_CASE("verify_almost_min rejects a corrupted field") {
    Grid g(1, 64);
    ScalarField bdry = make_profile(g, "affine:A=0.5");
    MinimizeReport rep = minimize_jp(bdry, Ball{{0.0, 0.0}, 1.0}, 2.0);
    // A tall interior spike raises local energy far beyond any competitor.
    ScalarField bad = rep.u;
    bad.at(48) += 0.5;
    AlmostMinReport rv = verify_almost_min(bad, {0.1, 1.0}, 2.0, 40, 7);
    CHECK(!rv.pass);
    CHECK(rv.worst_index >= 0);
    CHECK(rv.worst_ratio > 1.0);
}

TEST_CASE("nonlocal minimizer passes verification with its returned params") {
    Grid g(1, 64);
    ScalarField bdry = make_profile(g, "affine:A=0.5");
    auto [rep, params] = make_nonlocal_almost_minimizer(
        bdry, Ball{{0.0, 0.0}, 1.0}, 2.0, PhiSpec{PhiShape::Clamp, 1.0});
    AlmostMinReport rv = verify_almost_min(rep.u, params, 2.0, 15, 11);
    CHECK(rv.pass);
}
