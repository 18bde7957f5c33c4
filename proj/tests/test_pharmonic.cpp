#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <random>

#include "fblab/pharmonic.hpp"

using namespace fbl;

namespace {

ScalarField from_fn(const Grid& g, const std::function<double(double, double)>& f) {
    ScalarField u(g);
    for (int j = g.dim > 1 ? -g.extent : 0; j <= (g.dim > 1 ? g.extent : 0); ++j)
        for (int i = -g.extent; i <= g.extent; ++i)
            u.at(i, j) = f(i * g.h(), j * g.h());
    return u;
}

// Direct sparse Cholesky solve of the p=2 problem: minimize the quadratic
// form sum_c |grad x|^2 h^dim over the free nodes.
ScalarField laplace_oracle(const ScalarField& u, const Ball& B) {
    const Grid& g = u.grid;
    auto free_mask = detail::ball_free_mask(g, B);
    auto cells = detail::cells_touching(g, free_mask);
    std::vector<long> idx(free_mask.size(), -1);
    long nf = 0;
    for (size_t n = 0; n < free_mask.size(); ++n)
        if (free_mask[n]) idx[n] = nf++;

    const double m = cell_measure(g);
    const double inv_h = g.extent;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    auto add_pair = [&](long na, long nb, double coef) {
        // contribution coef * (x_a - x_b)^2 to the quadratic form (coef
        // absorbed the 1/2 factor convention of the stationarity system)
        bool fa = idx[na] >= 0, fb = idx[nb] >= 0;
        if (fa) trip.emplace_back(idx[na], idx[na], coef);
        if (fb) trip.emplace_back(idx[nb], idx[nb], coef);
        if (fa && fb) {
            trip.emplace_back(idx[na], idx[nb], -coef);
            trip.emplace_back(idx[nb], idx[na], -coef);
        } else if (fa) {
            rhs[idx[na]] += coef * u.values[static_cast<size_t>(nb)];
        } else if (fb) {
            rhs[idx[nb]] += coef * u.values[static_cast<size_t>(na)];
        }
    };
    for (long c : cells) {
        int i, j;
        g.cell_index(c, i, j);
        double coef = m * inv_h * inv_h;
        add_pair(g.node_id(i, j), g.node_id(i + 1, j), coef);
        if (g.dim > 1) add_pair(g.node_id(i, j), g.node_id(i, j + 1), coef);
    }
    Eigen::SparseMatrix<double> K(nf, nf);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    REQUIRE(solver.info() == Eigen::Success);
    Eigen::VectorXd x = solver.solve(rhs);

    ScalarField v = u;
    for (size_t n = 0; n < free_mask.size(); ++n)
        if (idx[n] >= 0) v.values[n] = x[idx[n]];
    return v;
}

} // namespace

TEST_CASE("affine boundary data is its own replacement") {
    for (double p : {1.5, 2.0, 3.0}) {
        Grid g(2, 24);
        ScalarField u = from_fn(
            g, [](double x, double y) { return 0.4 + 1.3 * x - 0.7 * y; });
        ReplacementResult r = p_harmonic_replacement(u, Ball{{0.0, 0.0}, 0.8}, p);
        for (size_t n = 0; n < u.values.size(); ++n)
            CHECK(r.v.values[n] == doctest::Approx(u.values[n]).epsilon(1e-9));
        CHECK(r.residual < 1e-8);
    }
}

TEST_CASE("p=2 replacement matches the direct sparse solve") {
    Grid g(2, 64);
    ScalarField u =
        from_fn(g, [](double x, double y) { return x * x - y * y; });
    Ball B{{0.0, 0.0}, 0.8};
    SolverOptions opt;
    opt.tol = 1e-13;
    ReplacementResult r = p_harmonic_replacement(u, B, 2.0, opt);
    ScalarField oracle = laplace_oracle(u, B);
    double err = 0.0;
    for (size_t n = 0; n < u.values.size(); ++n)
        err = std::max(err, std::abs(r.v.values[n] - oracle.values[n]));
    CHECK(err <= 1e-8);
    // x^2 - y^2 is harmonic, so the replacement is close to the data itself.
    double drift = 0.0;
    for (size_t n = 0; n < u.values.size(); ++n)
        drift = std::max(drift, std::abs(r.v.values[n] - u.values[n]));
    CHECK(drift < 5e-3); // O(h^2) consistency of the discrete Laplacian
}

TEST_CASE("1D replacement across the whole interval is the linear interpolant") {
    for (double p : {1.3, 2.0, 3.5}) {
        Grid g(1, 64);
        ScalarField u = from_fn(g, [](double x, double) {
            return x < 0.999 ? 0.3 * std::sin(3.0 * x) : 1.0;
        });
        u.at(-64) = 0.0;
        u.at(64) = 1.0;
        ReplacementResult r = p_harmonic_replacement(u, Ball{{0.0, 0.0}, 1.0}, p);
        for (int i = -64; i <= 64; ++i)
            CHECK(r.v.at(i) ==
                  doctest::Approx((i * g.h() + 1.0) / 2.0).epsilon(1e-7));
    }
}

TEST_CASE("replacement energy minimality and maximum principle") {
    Grid g(2, 32);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Ball B{{0.0, 0.0}, 0.75};
    for (double p : {1.5, 2.0, 3.0}) {
        ScalarField u = from_fn(g, [&](double x, double y) {
            return 0.5 * std::sin(2 * x + 1) + 0.4 * std::cos(3 * y) + x * y;
        });
        ReplacementResult r = p_harmonic_replacement(u, B, p);
        auto mask = detail::ball_free_mask(g, B);
        auto cells = detail::cells_touching(g, mask);
        double ev = detail::dirichlet_energy(r.v.values, g, cells, p);
        double eu = detail::dirichlet_energy(u.values, g, cells, p);
        CHECK(ev <= eu + 1e-9);

        // random interior bump competitor
        ScalarField w = r.v;
        for (size_t n = 0; n < w.values.size(); ++n)
            if (mask[n]) w.values[n] += 0.05 * d(rng);
        CHECK(ev <= detail::dirichlet_energy(w.values, g, cells, p) + 1e-9);

        // maximum principle against the fixed values
        double lo = 1e30, hi = -1e30;
        for (size_t n = 0; n < mask.size(); ++n)
            if (!mask[n]) {
                lo = std::min(lo, u.values[n]);
                hi = std::max(hi, u.values[n]);
            }
        for (size_t n = 0; n < mask.size(); ++n)
            if (mask[n]) {
                CHECK(r.v.values[n] >= lo - 1e-7);
                CHECK(r.v.values[n] <= hi + 1e-7);
            }

        // idempotence
        ReplacementResult r2 = p_harmonic_replacement(r.v, B, p);
        CHECK(std::abs(r2.energy - r.energy) <=
              1e-8 * std::max(1.0, std::abs(r.energy)));
    }
}

TEST_CASE("ellipticity_bounds explicit values") {
    EllipticityBounds b2 = ellipticity_bounds(2.0);
    CHECK(b2.lambda == doctest::Approx(1.0));
    CHECK(b2.Lambda == doctest::Approx(1.0));
    EllipticityBounds b3 = ellipticity_bounds(3.0);
    CHECK(b3.lambda == doctest::Approx(0.5));
    CHECK(b3.Lambda == doctest::Approx(3.0));
    EllipticityBounds b15 = ellipticity_bounds(1.5);
    CHECK(b15.lambda == doctest::Approx(0.5 * std::pow(1.5, -0.5)));
    CHECK(b15.Lambda == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(ellipticity_bounds(1.0), InvalidExponent);
}

TEST_CASE("averaged_jacobian special cases") {
    Grid g(2, 4);

    // p = 2: A = Id regardless of eta.
    VectorField eta(g);
    for (long c = 0; c < g.cell_count(); ++c) eta.set_cell(c, {0.2, -0.1});
    MatrixField A2 = averaged_jacobian({1.0, 0.5}, eta, 2.0);
    for (const Mat2& m : A2.values) {
        CHECK(m.a00 == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(m.a11 == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(m.a01 == doctest::Approx(0.0).scale(1.0));
    }

    // eta = 0: closed-form eigenvalues of DF(q).
    VectorField zero(g);
    Vec q{0.6, -0.8}; // |q| = 1
    for (double p : {1.5, 3.0, 4.0}) {
        MatrixField A = averaged_jacobian(q, zero, p);
        auto [lo, hi] = sym_eigenvalues(A.values[0], 2);
        double e1 = (p - 1.0) * std::pow(1.0, p - 2.0);
        double e2 = std::pow(1.0, p - 2.0);
        CHECK(std::min(e1, e2) == doctest::Approx(lo).epsilon(1e-10));
        CHECK(std::max(e1, e2) == doctest::Approx(hi).epsilon(1e-10));
    }

    // p=3 example from the ellipticity sandwich.
    VectorField eta04(g);
    for (long c = 0; c < g.cell_count(); ++c) eta04.set_cell(c, {0.0, 0.4});
    MatrixField A3 = averaged_jacobian({1.0, 0.0}, eta04, 3.0);
    for (const Mat2& m : A3.values) {
        auto [lo, hi] = sym_eigenvalues(m, 2);
        CHECK(lo >= 0.5 - 1e-12);
        CHECK(hi <= 3.0 + 1e-12);
    }

    // hypothesis guard
    VectorField big(g);
    for (long c = 0; c < g.cell_count(); ++c) big.set_cell(c, {0.0, 0.6});
    CHECK_THROWS_AS(averaged_jacobian({1.0, 0.0}, big, 3.0), HypothesisViolated);
}

TEST_CASE("averaged_jacobian symmetry and quadrature stability") {
    Grid g(2, 3);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::uniform_real_distribution<double> dp(1.2, 4.5);
    for (int trial = 0; trial < 300; ++trial) {
        double p = dp(rng);
        Vec q{d(rng), d(rng)};
        double qn = norm(q, 2);
        if (qn < 0.2) continue;
        VectorField eta(g);
        for (long c = 0; c < g.cell_count(); ++c) {
            Vec e{d(rng), d(rng)};
            double en = norm(e, 2);
            double cap = 0.49 * qn;
            if (en > cap) {
                e[0] *= cap / en;
                e[1] *= cap / en;
            }
            eta.set_cell(c, e);
        }
        MatrixField A8 = averaged_jacobian(q, eta, p, 8);
        MatrixField A16 = averaged_jacobian(q, eta, p, 16);
        EllipticityBounds eb = ellipticity_bounds(p);
        double scale = std::pow(qn, p - 2.0);
        for (long c = 0; c < g.cell_count(); ++c) {
            const Mat2& m = A8.values[static_cast<size_t>(c)];
            auto [lo, hi] = sym_eigenvalues(m, 2);
            CHECK(lo >= eb.lambda * scale * (1.0 - 1e-10) - 1e-12);
            CHECK(hi <= eb.Lambda * scale * (1.0 + 1e-10) + 1e-12);
            const Mat2& m16 = A16.values[static_cast<size_t>(c)];
            CHECK(std::abs(m.a00 - m16.a00) <= 1e-10 * std::max(1.0, scale));
            CHECK(std::abs(m.a01 - m16.a01) <= 1e-10 * std::max(1.0, scale));
            CHECK(std::abs(m.a11 - m16.a11) <= 1e-10 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("gauss_legendre_01 integrates polynomials exactly") {
    for (int n : {2, 4, 8, 16}) {
        std::vector<double> t, w;
        gauss_legendre_01(n, t, w);
        double wsum = 0.0;
        for (double wi : w) wsum += wi;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += w[i] * std::pow(t[i], k);
            CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
        }
    }
}

TEST_CASE("interior_gradient_bound_check on affine fields gives ratio 1") {
    Grid g(2, 32);
    ScalarField u = from_fn(
        g, [](double x, double y) { return 0.2 + 0.9 * x + 0.3 * y; });
    auto [sup, avg, ratio] =
        interior_gradient_bound_check(u, Ball{{0.0, 0.0}, 0.8}, 2.0);
    double qn = std::hypot(0.9, 0.3);
    CHECK(sup == doctest::Approx(qn).epsilon(1e-12));
    CHECK(avg == doctest::Approx(qn).epsilon(1e-12));
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interior gradient ratio is stable under refinement at p=2") {
    auto ratio_at = [](int extent) {
        Grid g(2, extent);
        ScalarField u = from_fn(g, [](double x, double y) {
            return std::sin(2.0 * x) * std::exp(0.5 * y);
        });
        ReplacementResult r = p_harmonic_replacement(u, Ball{{0.0, 0.0}, 0.8}, 2.0);
        auto [sup, avg, ratio] =
            interior_gradient_bound_check(r.v, Ball{{0.0, 0.0}, 0.8}, 2.0);
        (void)sup;
        (void)avg;
        return ratio;
    };
    double r1 = ratio_at(32), r2 = ratio_at(64);
    CHECK(std::abs(r1 - r2) / r1 < 0.10);
}
