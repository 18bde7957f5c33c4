#include "fblab/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fbl {

double unit_ball_volume(int dim) {
    if (dim == 1) return 2.0;
    if (dim == 2) return M_PI;
    throw OutOfDomain("unit_ball_volume: dim must be 1 or 2");
}

double phi(const PhiSpec& spec, double t) {
    if (spec.shape == PhiShape::Zero || t <= 0.0) return 0.0;
    double s = t / spec.scale;
    if (spec.shape == PhiShape::Clamp) return std::min(s, 1.0);
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

double phi_prime(const PhiSpec& spec, double t) {
    if (spec.shape == PhiShape::Zero || t <= 0.0) return 0.0;
    double s = t / spec.scale;
    if (s >= 1.0) return 0.0;
    if (spec.shape == PhiShape::Clamp) return 1.0 / spec.scale;
    return 6.0 * s * (1.0 - s) / spec.scale;
}

namespace {

struct Neighborhood {
    int di[4];
    int dj[4];
    int count;
};

Neighborhood axis_neighbors(int dim) {
    if (dim == 1) return {{1, -1, 0, 0}, {0, 0, 0, 0}, 2};
    return {{1, -1, 0, 0}, {0, 0, 1, -1}, 4};
}

// Pairwise interaction term over the in-ball cells; dense double sum.
struct NonlocalEval {
    PhiSpec spec;
    const Grid* g = nullptr;
    std::vector<long> cells;
    double m2 = 0.0;

    double cell_avg(const std::vector<double>& u, long c) const {
        int i, j;
        g->cell_index(c, i, j);
        if (g->dim == 1)
            return 0.5 * (u[static_cast<size_t>(g->node_id(i))] +
                          u[static_cast<size_t>(g->node_id(i + 1))]);
        return 0.25 * (u[static_cast<size_t>(g->node_id(i, j))] +
                       u[static_cast<size_t>(g->node_id(i + 1, j))] +
                       u[static_cast<size_t>(g->node_id(i, j + 1))] +
                       u[static_cast<size_t>(g->node_id(i + 1, j + 1))]);
    }

    double energy(const std::vector<double>& u) const {
        std::vector<double> a, pa;
        a.reserve(cells.size());
        for (long c : cells) {
            double v = cell_avg(u, c);
            if (v > 0.0) {
                a.push_back(v);
                pa.push_back(phi(spec, v));
            }
        }
        double e = 0.0;
        for (size_t y = 0; y < a.size(); ++y)
            for (size_t z = 0; z < a.size(); ++z)
                e += pa[y] * pa[z] * phi(spec, a[y] - a[z]);
        return e * m2;
    }

    // Accumulates dE/d(node value) into gout.
    void add_node_gradient(const std::vector<double>& u,
                           std::vector<double>& gout) const {
        std::vector<double> a(cells.size());
        for (size_t k = 0; k < cells.size(); ++k) a[k] = cell_avg(u, cells[k]);
        const double corner_w = g->dim == 1 ? 0.5 : 0.25;
        for (size_t c = 0; c < cells.size(); ++c) {
            double ga = 0.0;
            double pc = phi(spec, a[c]), dpc = phi_prime(spec, a[c]);
            for (size_t z = 0; z < cells.size(); ++z) {
                double pz = phi(spec, a[z]);
                if (pz == 0.0 && phi(spec, a[c]) == 0.0) continue;
                double d1 = a[c] - a[z];
                ga += dpc * pz * phi(spec, d1) + pc * pz * phi_prime(spec, d1);
                double d2 = a[z] - a[c];
                ga += pz * dpc * phi(spec, d2) - pz * pc * phi_prime(spec, d2);
            }
            ga *= m2;
            if (ga == 0.0) continue;
            int i, j;
            g->cell_index(cells[c], i, j);
            gout[static_cast<size_t>(g->node_id(i, j))] += corner_w * ga;
            gout[static_cast<size_t>(g->node_id(i + 1, j))] += corner_w * ga;
            if (g->dim > 1) {
                gout[static_cast<size_t>(g->node_id(i, j + 1))] += corner_w * ga;
                gout[static_cast<size_t>(g->node_id(i + 1, j + 1))] += corner_w * ga;
            }
        }
    }
};

struct Workspace {
    Grid g;
    Ball B;
    double p;
    PositivityRule rule;
    MinimizeOptions opt;
    const NonlocalEval* nl = nullptr;

    std::vector<std::uint8_t> free_mask;
    std::vector<long> cellset;    // dirichlet cells: touching(free) + in-ball
    std::vector<long> ball_cells; // volume cells

    double objective(const std::vector<double>& u) const {
        double e = detail::dirichlet_energy(u, g, cellset, p);
        const double m = cell_measure(g);
        for (long c : ball_cells) {
            int i, j;
            g.cell_index(c, i, j);
            bool act = u[static_cast<size_t>(g.node_id(i, j))] > rule.tau &&
                       u[static_cast<size_t>(g.node_id(i + 1, j))] > rule.tau;
            if (g.dim > 1)
                act = act &&
                      u[static_cast<size_t>(g.node_id(i, j + 1))] > rule.tau &&
                      u[static_cast<size_t>(g.node_id(i + 1, j + 1))] > rule.tau;
            if (act) e += m;
        }
        if (nl) e += nl->energy(u);
        return e;
    }
};

Workspace make_workspace(const ScalarField& boundary, const Ball& B, double p,
                         const MinimizeOptions& opt, const PositivityRule& rule) {
    if (p <= 1.0) throw InvalidExponent("minimize_jp: p must exceed 1");
    Workspace W{boundary.grid, B, p, rule, opt, nullptr, {}, {}, {}};
    const Grid& g = boundary.grid;
    W.free_mask.assign(static_cast<size_t>(g.node_count()), 0);
    const int E = g.extent;
    const double h = g.h();
    const double r2 = B.radius * B.radius;
    for (int j = g.dim > 1 ? -E + 1 : 0; j <= (g.dim > 1 ? E - 1 : 0); ++j)
        for (int i = -E + 1; i < E; ++i) {
            double dx = i * h - B.center[0];
            double dy = g.dim > 1 ? j * h - B.center[1] : 0.0;
            if (dx * dx + dy * dy < r2)
                W.free_mask[static_cast<size_t>(g.node_id(i, j))] = 1;
        }
    for (size_t n = 0; n < W.free_mask.size(); ++n)
        if (!W.free_mask[n] && boundary.values[n] < 0.0)
            throw NegativeBoundary("minimize_jp: negative boundary value");
    W.ball_cells = cells_in_ball(g, B);
    W.cellset = detail::cells_touching(g, W.free_mask);
    std::vector<long> merged = W.cellset;
    merged.insert(merged.end(), W.ball_cells.begin(), W.ball_cells.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    W.cellset = std::move(merged);
    return W;
}

// Solves the p-Dirichlet problem on the nodes flagged in sub_free, in place.
void resolve(Workspace& W, std::vector<double>& u,
             const std::vector<std::uint8_t>& sub_free) {
    auto cells = detail::cells_touching(W.g, sub_free);
    detail::solve_p_dirichlet(u, W.g, cells, sub_free, W.p, W.opt.solver);
}

struct FlipCandidate {
    long node;
    bool deactivate;
    double value; // sort key
};

std::vector<FlipCandidate> build_candidates(const Workspace& W,
                                            const std::vector<double>& u,
                                            const std::vector<std::uint8_t>& active) {
    const Grid& g = W.g;
    const int E = g.extent;
    auto nb = axis_neighbors(g.dim);
    auto inactive_at = [&](int i, int j) {
        if (std::abs(i) > E || (g.dim > 1 && std::abs(j) > E)) return true;
        size_t n = static_cast<size_t>(g.node_id(i, j));
        if (W.free_mask[n]) return active[n] == 0;
        return u[n] <= W.rule.tau;
    };
    std::vector<FlipCandidate> deact, act;
    for (int j = g.dim > 1 ? -E : 0; j <= (g.dim > 1 ? E : 0); ++j)
        for (int i = -E; i <= E; ++i) {
            size_t n = static_cast<size_t>(g.node_id(i, j));
            if (!W.free_mask[n]) continue;
            bool near_inactive = false, near_active = false;
            for (int k = 0; k < nb.count; ++k) {
                if (inactive_at(i + nb.di[k], j + nb.dj[k]))
                    near_inactive = true;
                else
                    near_active = true;
            }
            if (active[n] && near_inactive)
                deact.push_back({static_cast<long>(n), true, u[n]});
            else if (!active[n] && near_active)
                act.push_back({static_cast<long>(n), false, u[n]});
        }
    std::sort(deact.begin(), deact.end(),
              [](const FlipCandidate& a, const FlipCandidate& b) {
                  return a.value < b.value || (a.value == b.value && a.node < b.node);
              });
    if (deact.empty()) {
        // No interface yet: probe the smallest-valued active nodes.
        std::vector<FlipCandidate> small;
        for (size_t n = 0; n < W.free_mask.size(); ++n)
            if (W.free_mask[n] && active[n])
                small.push_back({static_cast<long>(n), true, u[n]});
        std::sort(small.begin(), small.end(),
                  [](const FlipCandidate& a, const FlipCandidate& b) {
                      return a.value < b.value || (a.value == b.value && a.node < b.node);
                  });
        if (small.size() > 16) small.resize(16);
        deact = std::move(small);
    }
    deact.insert(deact.end(), act.begin(), act.end());
    return deact;
}

std::vector<std::uint8_t> window_mask(const Workspace& W, long node,
                                      const std::vector<std::uint8_t>& active) {
    const Grid& g = W.g;
    std::vector<std::uint8_t> sub(W.free_mask.size(), 0);
    if (g.dim == 1) {
        for (size_t n = 0; n < sub.size(); ++n)
            sub[n] = W.free_mask[n] && active[n];
        return sub;
    }
    const int E = g.extent;
    const int na = g.nodes_axis();
    int ci = static_cast<int>(node % na) - E;
    int cj = static_cast<int>(node / na) - E;
    const int Wd = W.opt.flip_window;
    for (int j = std::max(cj - Wd, -E); j <= std::min(cj + Wd, E); ++j)
        for (int i = std::max(ci - Wd, -E); i <= std::min(ci + Wd, E); ++i) {
            size_t n = static_cast<size_t>(g.node_id(i, j));
            sub[n] = W.free_mask[n] && active[n];
        }
    return sub;
}

MinimizeReport run_minimize(const ScalarField& boundary, const Ball& B, double p,
                            const MinimizeOptions& opt, const PositivityRule& rule,
                            const NonlocalEval* nl) {
    Workspace W = make_workspace(boundary, B, p, opt, rule);
    const Grid& g = boundary.grid;
    const size_t N = boundary.values.size();

    MinimizeReport rep{ScalarField(g), 0, 0.0, 0, {}};
    std::vector<double>& u = rep.u.values;
    u = boundary.values;
    for (size_t n = 0; n < N; ++n)
        if (W.free_mask[n] && u[n] < 0.0) u[n] = 0.0;

    std::vector<std::uint8_t> active(N, 0);
    for (size_t n = 0; n < N; ++n) active[n] = W.free_mask[n] ? 1 : 0;

    // Phase 1: active-set alternation on the local functional.
    double J = W.objective(u);
    rep.energy_trace.push_back(J);
    std::vector<double> prev;
    std::vector<std::uint8_t> sub(N), new_active(N);
    for (long it = 0; it < opt.max_alternations; ++it) {
        ++rep.outer_iterations;
        prev = u;
        for (size_t n = 0; n < N; ++n) {
            sub[n] = W.free_mask[n] && active[n];
            if (W.free_mask[n] && !active[n]) u[n] = 0.0;
        }
        resolve(W, u, sub);
        for (size_t n = 0; n < N; ++n) {
            if (W.free_mask[n] && u[n] < 0.0) u[n] = 0.0;
            new_active[n] = W.free_mask[n] ? (u[n] > 0.0 ? 1 : 0) : 0;
        }
        double Jn = W.objective(u);
        if (Jn > J + 1e-12 * std::max(1.0, std::abs(J))) {
            u = prev;
            break;
        }
        long changes = 0;
        for (size_t n = 0; n < N; ++n)
            if (new_active[n] != active[n] && W.free_mask[n]) ++changes;
        rep.active_set_changes += changes;
        bool stable = changes == 0;
        double drop = J - Jn;
        J = std::min(J, Jn);
        rep.energy_trace.push_back(J);
        active = new_active;
        if (stable && drop < opt.tol * std::max(1.0, std::abs(J))) break;
    }

    // Phase 1b (nonlocal only): projected descent on the full smooth energy.
    if (nl) {
        W.nl = nl;
        const double delta =
            detail::resolve_delta(u, g, W.cellset, opt.solver);
        auto smooth = [&](const std::vector<double>& x) {
            const double m = cell_measure(g);
            const double d2 = delta * delta;
            double e = 0.0;
            for (long c : W.cellset) {
                Vec gr = cell_gradient(x, g, c);
                e += std::pow(dot(gr, gr, g.dim) + d2, 0.5 * p) * m;
            }
            return e + nl->energy(x);
        };
        std::vector<double> grad(N), trial(N);
        double E0 = smooth(u);
        double step = 0.1;
        for (long it = 0; it < 400; ++it) {
            std::fill(grad.begin(), grad.end(), 0.0);
            const double m = cell_measure(g);
            const double inv_h = g.extent;
            const double d2 = delta * delta;
            for (long c : W.cellset) {
                int ii, jj;
                g.cell_index(c, ii, jj);
                Vec gr = cell_gradient(u, g, c);
                double scale =
                    p * std::pow(dot(gr, gr, g.dim) + d2, 0.5 * p - 1.0) * m;
                size_t n00 = static_cast<size_t>(g.node_id(ii, jj));
                grad[n00] -= scale * gr[0] * inv_h;
                grad[static_cast<size_t>(g.node_id(ii + 1, jj))] +=
                    scale * gr[0] * inv_h;
                if (g.dim > 1) {
                    grad[n00] -= scale * gr[1] * inv_h;
                    grad[static_cast<size_t>(g.node_id(ii, jj + 1))] +=
                        scale * gr[1] * inv_h;
                }
            }
            nl->add_node_gradient(u, grad);
            bool moved = false;
            for (int bt = 0; bt < 40; ++bt) {
                for (size_t n = 0; n < N; ++n)
                    trial[n] = W.free_mask[n]
                                   ? std::max(0.0, u[n] - step * grad[n])
                                   : u[n];
                double Et = smooth(trial);
                if (Et < E0 - 1e-15 * std::max(1.0, E0)) {
                    u = trial;
                    double drop = E0 - Et;
                    E0 = Et;
                    moved = true;
                    step *= 2.0;
                    if (drop < 1e-11 * std::max(1.0, E0)) it = 1L << 30;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        for (size_t n = 0; n < N; ++n)
            active[n] = W.free_mask[n] ? (u[n] > 0.0 ? 1 : 0) : 0;
        rep.energy_trace.clear();
        J = W.objective(u);
        rep.energy_trace.push_back(J);
    }

    // Phase 2: single-node flips with a local re-solve, first-improving.
    const double eps_acc =
        std::max(100.0 * opt.solver.tol * std::max(1.0, std::abs(J)), 1e-13);
    long flips = 0;
    std::vector<double> u2;
    std::vector<std::uint8_t> active2;
    bool improved = true;
    while (improved) {
        improved = false;
        auto candidates = build_candidates(W, u, active);
        for (const auto& cand : candidates) {
            size_t n = static_cast<size_t>(cand.node);
            u2 = u;
            active2 = active;
            if (cand.deactivate) {
                active2[n] = 0;
                u2[n] = 0.0;
            } else {
                active2[n] = 1;
                auto nb = axis_neighbors(g.dim);
                const int E = g.extent;
                const int na = g.nodes_axis();
                int ci = static_cast<int>(cand.node % na) - E;
                int cj = static_cast<int>(cand.node / na) - E;
                double init = 0.0;
                int cnt = 0;
                for (int k = 0; k < nb.count; ++k) {
                    int i2 = ci + nb.di[k], j2 = cj + nb.dj[k];
                    if (std::abs(i2) > E || (g.dim > 1 && std::abs(j2) > E))
                        continue;
                    double v = u2[static_cast<size_t>(g.node_id(i2, j2))];
                    if (v > 0.0) {
                        init += v;
                        ++cnt;
                    }
                }
                u2[n] = cnt > 0 ? init / cnt : g.h();
            }
            auto sub2 = window_mask(W, cand.node, active2);
            resolve(W, u2, sub2);
            bool dead = false;
            for (size_t k = 0; k < N; ++k) {
                if (sub2[k] && u2[k] < 0.0) u2[k] = 0.0;
                if (sub2[k]) active2[k] = u2[k] > 0.0 ? 1 : 0;
            }
            if (!cand.deactivate && u2[n] <= 0.0) dead = true;
            if (dead) continue;
            double J2 = W.objective(u2);
            if (J2 < J - eps_acc) {
                u = u2;
                active = active2;
                J = J2;
                rep.energy_trace.push_back(J);
                ++rep.active_set_changes;
                improved = true;
                if (++flips > opt.max_flips)
                    throw NonConvergence("minimize_jp: flip cap exceeded");
                break;
            }
        }
    }

    // Final global equilibration on the settled active set.
    for (size_t n = 0; n < N; ++n) sub[n] = W.free_mask[n] && active[n];
    u2 = u;
    resolve(W, u2, sub);
    for (size_t n = 0; n < N; ++n)
        if (sub[n] && u2[n] < 0.0) u2[n] = 0.0;
    double Jf = W.objective(u2);
    if (Jf <= J) {
        u = u2;
        J = Jf;
        rep.energy_trace.push_back(J);
    }

    EnergyBreakdown e = eval_jp(rep.u, B, p, rule);
    rep.final_energy = e.total;
    return rep;
}

} // namespace

MinimizeReport minimize_jp(const ScalarField& boundary, const Ball& B, double p,
                           const MinimizeOptions& opt, const PositivityRule& rule) {
    return run_minimize(boundary, B, p, opt, rule, nullptr);
}

std::pair<MinimizeReport, AlmostMinParams> make_nonlocal_almost_minimizer(
    const ScalarField& boundary, const Ball& B, double p, const PhiSpec& spec,
    const MinimizeOptions& opt, const PositivityRule& rule) {
    AlmostMinParams params{unit_ball_volume(boundary.grid.dim),
                           static_cast<double>(boundary.grid.dim)};
    if (spec.shape == PhiShape::Zero)
        return {minimize_jp(boundary, B, p, opt, rule), params};
    NonlocalEval nl;
    nl.spec = spec;
    nl.g = &boundary.grid;
    nl.cells = cells_in_ball(boundary.grid, B);
    double m = cell_measure(boundary.grid);
    nl.m2 = m * m;
    return {run_minimize(boundary, B, p, opt, rule, &nl), params};
}

AlmostMinReport verify_almost_min(const ScalarField& u,
                                  const AlmostMinParams& params, double p,
                                  long n_balls, std::uint64_t seed,
                                  const VerifyOptions& opt,
                                  const PositivityRule& rule) {
    const Grid& g = u.grid;
    const double h = g.h();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    AlmostMinReport rep;
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (long b = 0; b < n_balls; ++b) {
        Vec center{0.0, 0.0};
        double dist = 0.0;
        do {
            center[0] = coord(rng);
            center[1] = g.dim > 1 ? coord(rng) : 0.0;
            double m = std::abs(center[0]);
            if (g.dim > 1) m = std::max(m, std::abs(center[1]));
            dist = 1.0 - m;
        } while (dist <= 4.0 * h * 1.001);
        double lo = std::log(4.0 * h), hi = std::log(dist);
        double r = std::exp(lo + (hi - lo) * unif(rng));
        Ball ball{center, r};

        BallCheck chk;
        chk.ball = ball;
        chk.ju = eval_jp(u, ball, p, rule).total;
        MinimizeReport comp = minimize_jp(u, ball, p, opt.minimize, rule);
        chk.jv = comp.final_energy;
        if (chk.jv > 0.0)
            chk.ratio = chk.ju / chk.jv;
        else
            chk.ratio = chk.ju > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        chk.allowed = 1.0 + params.kappa * std::pow(r, params.beta) + opt.c_slack * h;
        chk.pass = chk.ratio <= chk.allowed;
        if (!chk.pass) rep.pass = false;
        double excess = chk.ratio - chk.allowed;
        if (excess > worst_excess) {
            worst_excess = excess;
            rep.worst_index = b;
            rep.worst_ratio = chk.ratio;
        }
        rep.balls.push_back(chk);
    }
    return rep;
}

} // namespace fbl
