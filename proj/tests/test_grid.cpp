#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fblab/grid.hpp"

using namespace fbl;

TEST_CASE("grid guards and geometry") {
    CHECK_THROWS_AS(Grid(3, 8), OutOfDomain);
    CHECK_THROWS_AS(Grid(0, 8), OutOfDomain);
    CHECK_THROWS_AS(Grid(1, 1), OutOfDomain);

    Grid g(2, 4);
    CHECK(g.h() == doctest::Approx(0.25));
    CHECK(g.node_count() == 81);
    CHECK(g.cell_count() == 64);
    int i, j;
    for (long c = 0; c < g.cell_count(); ++c) {
        g.cell_index(c, i, j);
        CHECK(g.cell_id(i, j) == c);
    }
    Vec cc = g.cell_center(g.cell_id(0, 0));
    CHECK(cc[0] == doctest::Approx(0.125));
    CHECK(cc[1] == doctest::Approx(0.125));
}

TEST_CASE("discrete_gradient on constants and affine fields") {
    Grid g(2, 8);
    ScalarField zero(g);
    VectorField gz = discrete_gradient(zero);
    for (long c = 0; c < g.cell_count(); ++c) {
        CHECK(gz.at_cell(c)[0] == 0.0);
        CHECK(gz.at_cell(c)[1] == 0.0);
    }

    ScalarField aff(g);
    for (int jj = -8; jj <= 8; ++jj)
        for (int ii = -8; ii <= 8; ++ii)
            aff.at(ii, jj) = 2.0 * (ii * g.h()) - 1.0 * (jj * g.h());
    VectorField ga = discrete_gradient(aff);
    for (long c = 0; c < g.cell_count(); ++c) {
        CHECK(ga.at_cell(c)[0] == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(ga.at_cell(c)[1] == doctest::Approx(-1.0).epsilon(1e-14));
    }
}

TEST_CASE("discrete_gradient of x1^2 matches the difference table") {
    Grid g(2, 4);
    const double h = g.h();
    ScalarField u(g);
    for (int jj = -4; jj <= 4; ++jj)
        for (int ii = -4; ii <= 4; ++ii) u.at(ii, jj) = (ii * h) * (ii * h);
    VectorField gu = discrete_gradient(u);
    for (long c = 0; c < g.cell_count(); ++c) {
        int ii, jj;
        g.cell_index(c, ii, jj);
        double expect = (((ii + 1) * h) * ((ii + 1) * h) - (ii * h) * (ii * h)) / h;
        CHECK(gu.at_cell(c)[0] == doctest::Approx(expect).epsilon(1e-13));
        CHECK(gu.at_cell(c)[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("ball_average basics") {
    Grid g(2, 16);
    Ball B{{0.0, 0.0}, 0.8};

    VectorField cnst(g);
    for (long c = 0; c < g.cell_count(); ++c) cnst.set_cell(c, {-3.0, 4.0});
    CHECK(ball_average(cnst, B, 2.0) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(ball_average(cnst, B, 3.5) == doctest::Approx(5.0).epsilon(1e-12));

    ScalarField aff(g);
    for (int jj = -16; jj <= 16; ++jj)
        for (int ii = -16; ii <= 16; ++ii)
            aff.at(ii, jj) = 1.5 * ii * g.h() + 0.5 * jj * g.h();
    VectorField ga = discrete_gradient(aff);
    double qn = std::hypot(1.5, 0.5);
    for (double p : {1.5, 2.0, 3.0})
        CHECK(ball_average(ga, B, p) == doctest::Approx(qn).epsilon(1e-12));

    CHECK_THROWS_AS(ball_average(cnst, B, 0.5), InvalidExponent);
    // A ball that dodges every cell center: nodes are never centers.
    CHECK_THROWS_AS(ball_average(cnst, Ball{{0.0, 0.0}, 0.2 * g.h()}, 2.0),
                    EmptyBall);
}

TEST_CASE("ball_average disk moment oracle") {
    // mean of x1^2 over the unit disk is 1/4, so the quadratic average is 1/2.
    Grid g(2, 128);
    ScalarField x1(g);
    for (int jj = -128; jj <= 128; ++jj)
        for (int ii = -128; ii <= 128; ++ii) x1.at(ii, jj) = ii * g.h();
    double v = ball_average(x1, Ball{{0.0, 0.0}, 1.0}, 2.0);
    CHECK(v == doctest::Approx(0.5).epsilon(5e-3));
}

TEST_CASE("ball_average is monotone under pointwise domination") {
    Grid g(2, 12);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorField g1(g), g2(g);
    for (long c = 0; c < g.cell_count(); ++c) {
        Vec a{u(rng), u(rng)};
        g1.set_cell(c, a);
        double grow = 1.0 + std::abs(u(rng));
        g2.set_cell(c, {a[0] * grow, a[1] * grow});
    }
    Ball B{{0.1, -0.2}, 0.6};
    for (double p : {1.0, 2.0, 3.0})
        CHECK(ball_average(g1, B, p) <= ball_average(g2, B, p) + 1e-14);
}

TEST_CASE("cells_in_ball matches the center rule by brute force") {
    Grid g(2, 10);
    Ball B{{0.15, -0.3}, 0.55};
    auto cells = cells_in_ball(g, B);
    long count = 0;
    for (long c = 0; c < g.cell_count(); ++c) {
        Vec cc = g.cell_center(c);
        double dx = cc[0] - B.center[0], dy = cc[1] - B.center[1];
        bool in = dx * dx + dy * dy < B.radius * B.radius;
        bool listed = std::binary_search(cells.begin(), cells.end(), c);
        CHECK(in == listed);
        if (in) ++count;
    }
    CHECK(count == static_cast<long>(cells.size()));
}

TEST_CASE("rescale identity and affine invariance") {
    Grid g(2, 16);
    ScalarField lin(g);
    for (int jj = -16; jj <= 16; ++jj)
        for (int ii = -16; ii <= 16; ++ii)
            lin.at(ii, jj) = 0.7 * ii * g.h() - 0.2 * jj * g.h();

    ScalarField same = rescale(lin, 1.0);
    for (size_t n = 0; n < lin.values.size(); ++n)
        CHECK(same.values[n] == lin.values[n]);

    ScalarField half = rescale(lin, 0.5);
    for (size_t n = 0; n < lin.values.size(); ++n)
        CHECK(half.values[n] == doctest::Approx(lin.values[n]).epsilon(1e-12));

    CHECK_THROWS_AS(rescale(lin, 1.5), OutOfDomain);
    CHECK_THROWS_AS(rescale(lin, 0.0), OutOfDomain);
}

TEST_CASE("rescale of x1^2 halves the values") {
    Grid g(1, 64);
    ScalarField u(g);
    for (int ii = -64; ii <= 64; ++ii) u.at(ii) = (ii * g.h()) * (ii * g.h());
    ScalarField ur = rescale(u, 0.5);
    for (int ii = -64; ii <= 64; ++ii) {
        double x = ii * g.h();
        CHECK(ur.at(ii) == doctest::Approx(0.5 * x * x).epsilon(0.02).scale(1.0));
    }
}

TEST_CASE("affine_fit_gradient is exact on affine fields") {
    Grid g(2, 8);
    ScalarField u(g);
    for (int jj = -8; jj <= 8; ++jj)
        for (int ii = -8; ii <= 8; ++ii)
            u.at(ii, jj) = 0.3 + 1.2 * ii * g.h() - 0.8 * jj * g.h();
    Vec q = affine_fit_gradient(u);
    CHECK(q[0] == doctest::Approx(1.2).epsilon(1e-13));
    CHECK(q[1] == doctest::Approx(-0.8).epsilon(1e-13));
    Vec q2 = affine_fit_gradient(u, 3, -2);
    CHECK(q2[0] == doctest::Approx(1.2).epsilon(1e-13));
    CHECK(q2[1] == doctest::Approx(-0.8).epsilon(1e-13));
    CHECK_THROWS_AS(affine_fit_gradient(u, 8, 0), OutOfDomain);
}

TEST_CASE("csv round trip preserves values") {
    for (int dim : {1, 2}) {
        Grid g(dim, 6);
        ScalarField u(g);
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> d(-5.0, 5.0);
        for (auto& v : u.values) v = d(rng);
        std::stringstream ss;
        dump_csv(u, ss);
        ScalarField back = load_csv(ss);
        REQUIRE(back.grid == u.grid);
        for (size_t n = 0; n < u.values.size(); ++n)
            CHECK(back.values[n] ==
                  doctest::Approx(u.values[n]).epsilon(1e-15).scale(1.0));
    }
}

TEST_CASE("interpolate reproduces bilinear fields") {
    Grid g(2, 8);
    ScalarField u(g);
    for (int jj = -8; jj <= 8; ++jj)
        for (int ii = -8; ii <= 8; ++ii) {
            double x = ii * g.h(), y = jj * g.h();
            u.at(ii, jj) = 1.0 + 2.0 * x - y + 3.0 * x * y;
        }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-0.99, 0.99);
    for (int s = 0; s < 200; ++s) {
        double x = d(rng), y = d(rng);
        CHECK(u.interpolate({x, y}) ==
              doctest::Approx(1.0 + 2.0 * x - y + 3.0 * x * y).epsilon(1e-12));
    }
}
