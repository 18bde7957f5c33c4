#include "fblab/pharmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbl {

void gauss_legendre_01(int n, std::vector<double>& nodes,
                       std::vector<double>& weights) {
    if (n < 2) throw InvalidExponent("gauss_legendre_01: need at least 2 nodes");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        // Newton on P_n, standard Chebyshev-like initial guess.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

namespace detail {

std::vector<long> cells_touching(const Grid& g,
                                 const std::vector<std::uint8_t>& free_mask) {
    std::vector<long> cells;
    const int E = g.extent;
    auto is_free = [&](int i, int j) {
        return free_mask[static_cast<size_t>(g.node_id(i, j))] != 0;
    };
    if (g.dim == 1) {
        for (int i = -E; i < E; ++i)
            if (is_free(i, 0) || is_free(i + 1, 0)) cells.push_back(g.cell_id(i));
        return cells;
    }
    for (int j = -E; j < E; ++j)
        for (int i = -E; i < E; ++i)
            if (is_free(i, j) || is_free(i + 1, j) || is_free(i, j + 1) ||
                is_free(i + 1, j + 1))
                cells.push_back(g.cell_id(i, j));
    return cells;
}

double dirichlet_energy(const std::vector<double>& nodal, const Grid& g,
                        const std::vector<long>& cells, double p) {
    const double m = cell_measure(g);
    double e = 0.0;
    for (long c : cells)
        e += std::pow(norm(cell_gradient(nodal, g, c), g.dim), p) * m;
    return e;
}

double resolve_delta(const std::vector<double>& nodal, const Grid& g,
                     const std::vector<long>& cells, const SolverOptions& opt) {
    if (opt.delta_reg >= 0.0) return opt.delta_reg;
    double gmax = 1.0;
    for (long c : cells)
        gmax = std::max(gmax, norm(cell_gradient(nodal, g, c), g.dim));
    return 1e-8 * gmax;
}

namespace {

double reg_energy(const std::vector<double>& nodal, const Grid& g,
                  const std::vector<long>& cells, double p, double delta) {
    const double m = cell_measure(g);
    const double d2 = delta * delta;
    double e = 0.0;
    for (long c : cells) {
        Vec gr = cell_gradient(nodal, g, c);
        e += std::pow(dot(gr, gr, g.dim) + d2, 0.5 * p) * m;
    }
    return e;
}

struct CellHess {
    double a00, a01, a11;
};

struct CellNodes {
    long f00, f10, f01; // compact free-node indices, -1 when fixed
};

// out += H x on the compact free-node vectors; H is the Hessian of the
// regularized energy assembled from the per-cell gradient-space matrices hc.
void apply_hessian(const std::vector<double>& x,
                   const std::vector<CellNodes>& cn,
                   const std::vector<CellHess>& hc, int dim, double m,
                   double inv_h, std::vector<double>& out) {
    for (size_t k = 0; k < cn.size(); ++k) {
        const CellNodes& c = cn[k];
        const CellHess& H = hc[k];
        double x00 = c.f00 >= 0 ? x[static_cast<size_t>(c.f00)] : 0.0;
        double x10 = c.f10 >= 0 ? x[static_cast<size_t>(c.f10)] : 0.0;
        double gx = (x10 - x00) * inv_h;
        if (dim == 1) {
            double f0 = H.a00 * gx * m * inv_h;
            if (c.f00 >= 0) out[static_cast<size_t>(c.f00)] -= f0;
            if (c.f10 >= 0) out[static_cast<size_t>(c.f10)] += f0;
            continue;
        }
        double x01 = c.f01 >= 0 ? x[static_cast<size_t>(c.f01)] : 0.0;
        double gy = (x01 - x00) * inv_h;
        double f0 = (H.a00 * gx + H.a01 * gy) * m * inv_h;
        double f1 = (H.a01 * gx + H.a11 * gy) * m * inv_h;
        if (c.f00 >= 0) out[static_cast<size_t>(c.f00)] -= f0 + f1;
        if (c.f10 >= 0) out[static_cast<size_t>(c.f10)] += f0;
        if (c.f01 >= 0) out[static_cast<size_t>(c.f01)] += f1;
    }
}

} // namespace

double weak_residual(const std::vector<double>& nodal, const Grid& g,
                     const std::vector<long>& cells,
                     const std::vector<std::uint8_t>& free_mask, double p) {
    const double m = cell_measure(g);
    const double inv_h = g.extent;
    std::vector<double> defect(nodal.size(), 0.0);
    for (long c : cells) {
        int i, j;
        g.cell_index(c, i, j);
        Vec gr = cell_gradient(nodal, g, c);
        double gn = norm(gr, g.dim);
        if (gn == 0.0) continue; // flux |z|^{p-2} z -> 0 as z -> 0 for p > 1
        double scale = std::pow(gn, p - 2.0) * m;
        const size_t n00 = static_cast<size_t>(g.node_id(i, j));
        defect[n00] -= scale * gr[0] * inv_h;
        defect[static_cast<size_t>(g.node_id(i + 1, j))] += scale * gr[0] * inv_h;
        if (g.dim > 1) {
            defect[n00] -= scale * gr[1] * inv_h;
            defect[static_cast<size_t>(g.node_id(i, j + 1))] += scale * gr[1] * inv_h;
        }
    }
    double r = 0.0;
    for (size_t n = 0; n < nodal.size(); ++n)
        if (free_mask[n]) r = std::max(r, std::abs(defect[n]));
    return r;
}

long solve_p_dirichlet(std::vector<double>& nodal, const Grid& g,
                       const std::vector<long>& cells,
                       const std::vector<std::uint8_t>& free_mask, double p,
                       const SolverOptions& opt) {
    if (p <= 1.0) throw InvalidExponent("solve_p_dirichlet: p must exceed 1");
    const size_t N = nodal.size();
    long n_free = 0;
    for (size_t n = 0; n < N; ++n) n_free += free_mask[n] ? 1 : 0;
    if (n_free == 0 || cells.empty()) return 0;

    const double delta = resolve_delta(nodal, g, cells, opt);
    const double d2 = delta * delta;
    const long cg_cap = opt.max_cg > 0 ? opt.max_cg : 10 * n_free + 50;
    const double m = cell_measure(g);
    const double inv_h = g.extent;
    const double inv_h2 = inv_h * inv_h;

    // Compact free-node indexing so the CG works on vectors of size n_free.
    std::vector<long> fidx(N, -1);
    std::vector<size_t> free_nodes;
    free_nodes.reserve(static_cast<size_t>(n_free));
    for (size_t n = 0; n < N; ++n)
        if (free_mask[n]) {
            fidx[n] = static_cast<long>(free_nodes.size());
            free_nodes.push_back(n);
        }
    const size_t F = free_nodes.size();
    std::vector<CellNodes> cn(cells.size());
    for (size_t k = 0; k < cells.size(); ++k) {
        int i, j;
        g.cell_index(cells[k], i, j);
        cn[k].f00 = fidx[static_cast<size_t>(g.node_id(i, j))];
        cn[k].f10 = fidx[static_cast<size_t>(g.node_id(i + 1, j))];
        cn[k].f01 = g.dim > 1 ? fidx[static_cast<size_t>(g.node_id(i, j + 1))] : -1;
    }

    std::vector<CellHess> hc(cells.size());
    std::vector<double> diag(F), grad(F), r(F), z(F), d(F), Ad(F), step(F);
    std::vector<double> trial(N);

    double energy = reg_energy(nodal, g, cells, p, delta);
    long sweep = 0;
    for (; sweep < opt.max_outer; ++sweep) {
        // Gradient and exact Hessian of the regularized energy at the iterate.
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(diag.begin(), diag.end(), 0.0);
        for (size_t k = 0; k < cells.size(); ++k) {
            Vec gr = cell_gradient(nodal, g, cells[k]);
            double s = dot(gr, gr, g.dim) + d2;
            double w1 = p * std::pow(s, 0.5 * p - 1.0);
            double w2 = p * (p - 2.0) * std::pow(s, 0.5 * p - 2.0);
            const CellHess H{w1 + w2 * gr[0] * gr[0], w2 * gr[0] * gr[1],
                             w1 + w2 * gr[1] * gr[1]};
            hc[k] = H;
            const CellNodes& c = cn[k];
            double f0 = w1 * gr[0] * m * inv_h;
            double f1 = g.dim > 1 ? w1 * gr[1] * m * inv_h : 0.0;
            if (c.f00 >= 0) {
                grad[static_cast<size_t>(c.f00)] -= f0 + f1;
                diag[static_cast<size_t>(c.f00)] +=
                    (H.a00 + (g.dim > 1 ? H.a11 + 2.0 * H.a01 : 0.0)) * m * inv_h2;
            }
            if (c.f10 >= 0) {
                grad[static_cast<size_t>(c.f10)] += f0;
                diag[static_cast<size_t>(c.f10)] += H.a00 * m * inv_h2;
            }
            if (c.f01 >= 0) {
                grad[static_cast<size_t>(c.f01)] += f1;
                diag[static_cast<size_t>(c.f01)] += H.a11 * m * inv_h2;
            }
        }

        double gnorm = 0.0;
        for (size_t n = 0; n < F; ++n) gnorm += grad[n] * grad[n];
        gnorm = std::sqrt(gnorm);

        // Newton direction: H step = -grad on the free nodes (Jacobi-CG).
        std::fill(step.begin(), step.end(), 0.0);
        const double cg_tol = std::max(1e-300, 1e-6 * gnorm);
        double rz = 0.0;
        for (size_t n = 0; n < F; ++n) {
            r[n] = -grad[n];
            z[n] = diag[n] > 0.0 ? r[n] / diag[n] : 0.0;
            rz += r[n] * z[n];
        }
        d = z;
        for (long it = 0; it < cg_cap; ++it) {
            double rn = 0.0;
            for (size_t n = 0; n < F; ++n) rn += r[n] * r[n];
            if (std::sqrt(rn) <= cg_tol) break;
            std::fill(Ad.begin(), Ad.end(), 0.0);
            apply_hessian(d, cn, hc, g.dim, m, inv_h, Ad);
            double dAd = 0.0;
            for (size_t n = 0; n < F; ++n) dAd += d[n] * Ad[n];
            if (dAd <= 0.0) break;
            double alpha = rz / dAd;
            double rz_new = 0.0;
            for (size_t n = 0; n < F; ++n) {
                step[n] += alpha * d[n];
                r[n] -= alpha * Ad[n];
                z[n] = diag[n] > 0.0 ? r[n] / diag[n] : 0.0;
                rz_new += r[n] * z[n];
            }
            double beta = rz > 0.0 ? rz_new / rz : 0.0;
            rz = rz_new;
            for (size_t n = 0; n < F; ++n) d[n] = z[n] + beta * d[n];
        }

        // Backtracking line search along the Newton direction.
        double best = energy;
        double t_used = 0.0;
        trial = nodal;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            for (size_t n = 0; n < F; ++n)
                trial[free_nodes[n]] = nodal[free_nodes[n]] + t * step[n];
            double e = reg_energy(trial, g, cells, p, delta);
            if (e < best) {
                best = e;
                t_used = t;
                break;
            }
        }
        if (t_used == 0.0) break; // numerical floor reached
        for (size_t n = 0; n < F; ++n) nodal[free_nodes[n]] += t_used * step[n];
        double drop = energy - best;
        energy = best;
        if (drop <= opt.tol * std::max(energy, 1e-300)) return sweep + 1;
    }
    if (sweep >= opt.max_outer)
        throw NonConvergence("solve_p_dirichlet: sweep cap hit before tolerance");
    return sweep + 1;
}

std::vector<std::uint8_t> ball_free_mask(const Grid& g, const Ball& B) {
    std::vector<std::uint8_t> free_mask(static_cast<size_t>(g.node_count()), 0);
    const int E = g.extent;
    const double h = g.h();
    const double r2 = B.radius * B.radius;
    auto inside = [&](int i, int j) {
        double dx = i * h - B.center[0];
        double dy = g.dim > 1 ? j * h - B.center[1] : 0.0;
        return dx * dx + dy * dy < r2;
    };
    if (g.dim == 1) {
        for (int i = -E + 1; i < E; ++i)
            if (inside(i, 0)) free_mask[static_cast<size_t>(g.node_id(i))] = 1;
    } else {
        for (int j = -E + 1; j < E; ++j)
            for (int i = -E + 1; i < E; ++i)
                if (inside(i, j)) free_mask[static_cast<size_t>(g.node_id(i, j))] = 1;
    }
    return free_mask;
}

} // namespace detail

ReplacementResult p_harmonic_replacement(const ScalarField& u, const Ball& B,
                                         double p, const SolverOptions& opt) {
    if (p <= 1.0) throw InvalidExponent("p_harmonic_replacement: p must exceed 1");
    const Grid& g = u.grid;
    auto free_mask = detail::ball_free_mask(g, B);
    auto cells = detail::cells_touching(g, free_mask);

    ReplacementResult res{ScalarField(g), 0, 0.0, 0.0};
    res.v = u;
    res.iterations = detail::solve_p_dirichlet(res.v.values, g, cells, free_mask, p, opt);
    res.residual = detail::weak_residual(res.v.values, g, cells, free_mask, p);
    res.energy = detail::dirichlet_energy(res.v.values, g, cells_in_ball(g, B), p);
    return res;
}

ReplacementResult p_harmonic_replacement(const ScalarField& u, const Ball& B,
                                         double p, double tol, double delta_reg) {
    SolverOptions opt;
    opt.tol = tol;
    opt.delta_reg = delta_reg;
    return p_harmonic_replacement(u, B, p, opt);
}

EllipticityBounds ellipticity_bounds(double p) {
    if (p <= 1.0) throw InvalidExponent("ellipticity_bounds: p must exceed 1");
    double a = std::pow(2.0, 2.0 - p);
    double b = (p - 1.0) * std::pow(1.5, p - 2.0);
    if (p >= 2.0) return {a, b};
    return {b, a};
}

std::pair<double, double> sym_eigenvalues(const Mat2& m, int dim) {
    if (dim == 1) return {m.a00, m.a00};
    double tr = m.a00 + m.a11;
    double disc = std::sqrt((m.a00 - m.a11) * (m.a00 - m.a11) + 4.0 * m.a01 * m.a01);
    return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

MatrixField averaged_jacobian(const Vec& q, const VectorField& eta, double p,
                              int quad_nodes) {
    if (p <= 1.0) throw InvalidExponent("averaged_jacobian: p must exceed 1");
    const int dim = eta.grid.dim;
    const double qn = norm(q, dim);
    std::vector<double> t, wt;
    gauss_legendre_01(quad_nodes, t, wt);

    MatrixField A(eta.grid);
    const long nc = eta.grid.cell_count();
    for (long c = 0; c < nc; ++c) {
        Vec e = eta.at_cell(c);
        if (norm(e, dim) >= 0.5 * qn)
            throw HypothesisViolated(
                "averaged_jacobian: |eta| < |q|/2 fails at cell " + std::to_string(c));
        Mat2 m;
        for (int k = 0; k < quad_nodes; ++k) {
            Vec z{q[0] + t[k] * e[0], q[1] + t[k] * e[1]};
            double zn = norm(z, dim);
            if (dim == 1) {
                m.a00 += wt[k] * (p - 1.0) * std::pow(zn, p - 2.0);
                continue;
            }
            double rank1 = (p - 2.0) * std::pow(zn, p - 4.0);
            double id = std::pow(zn, p - 2.0);
            m.a00 += wt[k] * (rank1 * z[0] * z[0] + id);
            m.a01 += wt[k] * rank1 * z[0] * z[1];
            m.a11 += wt[k] * (rank1 * z[1] * z[1] + id);
        }
        A.values[static_cast<size_t>(c)] = m;
    }
    return A;
}

std::tuple<double, double, double> interior_gradient_bound_check(
    const ScalarField& v, const Ball& B, double p) {
    VectorField grad = discrete_gradient(v);
    Ball half{B.center, 0.5 * B.radius};
    double sup = 0.0;
    for (long c : cells_in_ball(v.grid, half))
        sup = std::max(sup, norm(grad.at_cell(c), v.grid.dim));
    double avg = ball_average(grad, B, p);
    double ratio = avg > 0.0 ? sup / avg : 0.0;
    return {sup, avg, ratio};
}

} // namespace fbl
