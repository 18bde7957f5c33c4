#include "fblab/energy.hpp"

#include <cmath>
#include <random>

namespace fbl {

bool cell_active(const ScalarField& u, long c, const PositivityRule& rule) {
    int i, j;
    u.grid.cell_index(c, i, j);
    if (u.grid.dim == 1) return u.at(i) > rule.tau && u.at(i + 1) > rule.tau;
    return u.at(i, j) > rule.tau && u.at(i + 1, j) > rule.tau &&
           u.at(i, j + 1) > rule.tau && u.at(i + 1, j + 1) > rule.tau;
}

EnergyBreakdown eval_jp(const ScalarField& u, const Ball& B, double p,
                        const PositivityRule& rule) {
    if (p <= 1.0) throw InvalidExponent("eval_jp: p must exceed 1");
    const double meas = cell_measure(u.grid);
    EnergyBreakdown e;
    for (long c : cells_in_ball(u.grid, B)) {
        Vec g = cell_gradient(u.values, u.grid, c);
        e.dirichlet += std::pow(norm(g, u.grid.dim), p) * meas;
        if (cell_active(u, c, rule)) e.volume += meas;
    }
    e.total = e.dirichlet + e.volume;
    return e;
}

double zero_set_measure(const ScalarField& u, const Ball& B,
                        const PositivityRule& rule) {
    const double meas = cell_measure(u.grid);
    double zero = 0.0;
    for (long c : cells_in_ball(u.grid, B))
        if (!cell_active(u, c, rule)) zero += meas;
    return zero;
}

std::pair<double, double> monotonicity_gap(const Vec& xi, const Vec& zeta,
                                           double p, int dim) {
    if (p <= 1.0) throw InvalidExponent("monotonicity_gap: p must exceed 1");
    const double nx = norm(xi, dim), nz = norm(zeta, dim);
    if (nx == 0.0 || nz == 0.0)
        throw DegenerateInput("monotonicity_gap: arguments must be nonzero");
    Vec diff{xi[0] - zeta[0], xi[1] - zeta[1]};
    const double nd = norm(diff, dim);
    const double ax = std::pow(nx, p - 2), az = std::pow(nz, p - 2);
    Vec flux{ax * xi[0] - az * zeta[0], ax * xi[1] - az * zeta[1]};
    double lhs = dot(flux, diff, dim);
    double bound = p < 2.0 ? nd * nd * std::pow(nx + nz, p - 2) : std::pow(nd, p);
    return {lhs, bound};
}

double estimate_gamma(double p, int dim, long n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> comp(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.05, 2.0);
    double best = std::numeric_limits<double>::infinity();
    for (long s = 0; s < n_samples; ++s) {
        Vec xi{comp(rng), dim > 1 ? comp(rng) : 0.0};
        Vec zeta{comp(rng), dim > 1 ? comp(rng) : 0.0};
        double sx = scale(rng), sz = scale(rng);
        xi[0] *= sx;
        xi[1] *= sx;
        zeta[0] *= sz;
        zeta[1] *= sz;
        if (norm(xi, dim) < 1e-12 || norm(zeta, dim) < 1e-12) continue;
        Vec d{xi[0] - zeta[0], xi[1] - zeta[1]};
        if (norm(d, dim) < 1e-12) continue;
        auto [lhs, bound] = monotonicity_gap(xi, zeta, p, dim);
        if (bound > 0.0) best = std::min(best, lhs / bound);
    }
    return best;
}

} // namespace fbl
