#include "fblab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fbl {

namespace {

double shifted_lp(const std::vector<double>& uv, const std::vector<double>& vv,
                  const Grid& g, const std::vector<long>& cells, double p) {
    const double m = cell_measure(g);
    double e = 0.0;
    for (long c : cells) {
        Vec gu = cell_gradient(uv, g, c);
        Vec gv = cell_gradient(vv, g, c);
        Vec d{gu[0] - gv[0], gu[1] - gv[1]};
        e += std::pow(norm(d, g.dim), p) * m;
    }
    return e;
}

} // namespace

EnergyComparisonReport check_energy_comparison(const ScalarField& u,
                                               const Ball& B, double p,
                                               double gamma_hat,
                                               const RegOptions& opt) {
    if (p <= 1.0) throw InvalidExponent("check_energy_comparison: p must exceed 1");
    if (gamma_hat <= 0.0)
        throw DegenerateInput("check_energy_comparison: gamma_hat must be positive");
    const Grid& g = u.grid;
    ReplacementResult rep = p_harmonic_replacement(u, B, p, opt.solver);

    auto mask = detail::ball_free_mask(g, B);
    auto cells = detail::cells_touching(g, mask);
    double eu = detail::dirichlet_energy(u.values, g, cells, p);
    double ev = detail::dirichlet_energy(rep.v.values, g, cells, p);

    EnergyComparisonReport r;
    r.gap = eu - ev;
    r.lhs = shifted_lp(u.values, rep.v.values, g, cells, p);
    r.residual = rep.residual;
    r.iterations = rep.iterations;
    double gap_pos = std::max(r.gap, 0.0);
    if (p >= 2.0) {
        r.rhs = gap_pos / gamma_hat;
    } else {
        const double m = cell_measure(g);
        double sum = 0.0;
        for (long c : cells) {
            Vec gu = cell_gradient(u.values, g, c);
            Vec gv = cell_gradient(rep.v.values, g, c);
            sum += std::pow(norm(gu, g.dim) + norm(gv, g.dim), p) * m;
        }
        double cconst = std::pow(p * gamma_hat * std::pow(2.0, p - 3.0), -0.5 * p);
        r.rhs = cconst * std::pow(gap_pos, 0.5 * p) * std::pow(sum, 1.0 - 0.5 * p);
    }
    double slack = opt.c_slack * g.h();
    r.pass = r.lhs <= r.rhs * (1.0 + slack) + 1e-12;
    return r;
}

DichotomyOutcome dichotomy_experiment(const ScalarField& u, double p, double eps,
                                      double eta, double M, double C0_bar,
                                      const RegOptions& opt) {
    if (!(eps > 0.0 && eps < 1.0))
        throw OutOfDomain("dichotomy_experiment: eps must lie in (0,1)");
    if (!(eta > 0.0 && eta <= 0.5))
        throw OutOfDomain("dichotomy_experiment: eta must lie in (0,1/2]");
    const Ball B1{{0.0, 0.0}, 1.0};
    VectorField gu = discrete_gradient(u);

    DichotomyOutcome out;
    out.a = ball_average(gu, B1, p);
    if (out.a < M) {
        out.tag = DichotomyTag::NotApplicable;
        return out;
    }
    ReplacementResult rep = p_harmonic_replacement(u, B1, p, opt.solver);
    out.q = affine_fit_gradient(rep.v);
    const Ball Beta{{0.0, 0.0}, eta};
    out.a_eta = ball_average(gu, Beta, p);
    if (out.a_eta <= 0.5 * out.a) {
        out.tag = DichotomyTag::Decay;
        return out;
    }
    out.flatness = ball_average_shifted(gu, out.q, Beta, p);
    double qn = norm(out.q, u.grid.dim);
    if (out.flatness <= eps * out.a && 0.25 * out.a < qn && qn <= C0_bar * out.a) {
        out.tag = DichotomyTag::Flat;
        out.state = {out.q, out.a, out.flatness / out.a, 0.0};
        return out;
    }
    out.tag = DichotomyTag::RawFailure;
    return out;
}

ImprovementResult improvement_step(const ScalarField& u,
                                   const FlatnessState& state, double p,
                                   double rho, double C0,
                                   const RegOptions& opt) {
    const int dim = u.grid.dim;
    double qn = norm(state.q, dim);
    if (!(state.a / 8.0 < qn && qn <= 2.0 * C0 * state.a))
        throw HypothesisViolated(
            "improvement_step: slope bounds a/8 < |q| <= 2 C0 a fail");
    const Ball B910{{0.0, 0.0}, 0.9};
    ReplacementResult rep = p_harmonic_replacement(u, B910, p, opt.solver);
    Vec qtilde = affine_fit_gradient(rep.v);

    VectorField gu = discrete_gradient(u);
    ImprovementResult res;
    res.rho = rho;
    Vec shift{qtilde[0] - state.q[0], qtilde[1] - state.q[1]};
    res.q_shift = norm(shift, dim);
    double flat = ball_average_shifted(gu, qtilde, Ball{{0.0, 0.0}, rho}, p);
    res.new_state = {qtilde, state.a, state.a > 0.0 ? flat / state.a : 0.0,
                     state.b};
    res.zero_measure = zero_set_measure(u, B910, opt.rule);

    double ell_min = std::numeric_limits<double>::infinity();
    for (long c : cells_in_ball(u.grid, B910)) {
        Vec x = u.grid.cell_center(c);
        ell_min = std::min(ell_min, state.b + dot(state.q, x, dim));
    }
    res.ell_min = ell_min;
    return res;
}

DecayTrace dyadic_decay_track(const ScalarField& u, double p, double eps,
                              double rho, double alpha, int K,
                              const RegOptions& opt) {
    if (!(rho > 0.0 && rho < 1.0))
        throw OutOfDomain("dyadic_decay_track: rho must lie in (0,1)");
    const Grid& g = u.grid;
    const double h = g.h();
    const Ball B1{{0.0, 0.0}, 1.0};
    const Ball B910{{0.0, 0.0}, 0.9};

    DecayTrace trace;
    trace.rho = rho;
    trace.alpha = alpha;

    double a = ball_average(discrete_gradient(u), B1, p);
    ReplacementResult rep0 = p_harmonic_replacement(u, B910, p, opt.solver);
    Vec q = affine_fit_gradient(rep0.v);

    const double slack = 1.0 + opt.c_slack * h;
    for (int k = 0; k <= K; ++k) {
        double scale = std::pow(rho, k);
        if (scale < 8.0 * h) {
            trace.truncated = true;
            break;
        }
        ScalarField uk = rescale(u, scale);
        VectorField guk = discrete_gradient(uk);
        DecayRow row;
        row.k = k;
        row.a_k = ball_average(guk, B1, p);
        row.q_k = q;
        double flat_abs = ball_average_shifted(guk, q, B1, p);
        row.flat_k = a > 0.0 ? flat_abs / a : 0.0;
        trace.rows.push_back(row);
        if (row.flat_k > std::pow(rho, k * alpha) * eps * slack) trace.pass = false;

        if (k < K && scale * rho >= 8.0 * h) {
            ReplacementResult repk = p_harmonic_replacement(uk, B910, p, opt.solver);
            Vec qn = affine_fit_gradient(repk.v);
            Vec d{qn[0] - q[0], qn[1] - q[1]};
            trace.slope_increment_sum += norm(d, g.dim);
            q = qn;
        }
    }
    return trace;
}

CampanatoReport campanato_seminorm(const ScalarField& gfield, double p,
                                   double lambda,
                                   const std::vector<double>& radii,
                                   const std::vector<Vec>& centers,
                                   long n_pairs, std::uint64_t seed) {
    const Grid& g = gfield.grid;
    const int n = g.dim;
    if (!(lambda > n && lambda <= n + p))
        throw ExponentOutOfRange("campanato_seminorm: need n < lambda <= n+p");
    const double m = cell_measure(g);
    const Ball B1{{0.0, 0.0}, 1.0};
    auto omega = cells_in_ball(g, B1);
    std::vector<std::uint8_t> in_omega(static_cast<size_t>(g.cell_count()), 0);
    for (long c : omega) in_omega[static_cast<size_t>(c)] = 1;

    CampanatoReport rep;
    rep.lambda = lambda;
    rep.gamma = (lambda - n) / p;

    for (const Vec& x0 : centers) {
        for (double r : radii) {
            std::vector<double> vals;
            for (long c : cells_in_ball(g, Ball{x0, r}))
                if (in_omega[static_cast<size_t>(c)])
                    vals.push_back(gfield.cell_value(c));
            if (vals.empty()) continue;
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            auto osc = [&](double c0) {
                double s = 0.0;
                for (double v : vals) s += std::pow(std::abs(v - c0), p);
                return s * m;
            };
            rep.seminorm = std::max(
                rep.seminorm, std::pow(std::pow(r, -lambda) * osc(mean), 1.0 / p));
            // Golden-section for the best constant; the objective is convex.
            double lo = *std::min_element(vals.begin(), vals.end());
            double hi = *std::max_element(vals.begin(), vals.end());
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
            double f1 = osc(c1), f2 = osc(c2);
            for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                if (f1 <= f2) {
                    hi = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = hi - gr * (hi - lo);
                    f1 = osc(c1);
                } else {
                    lo = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = lo + gr * (hi - lo);
                    f2 = osc(c2);
                }
            }
            rep.seminorm_inf = std::max(
                rep.seminorm_inf,
                std::pow(std::pow(r, -lambda) * std::min(f1, f2), 1.0 / p));
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, omega.size() - 1);
    for (long s = 0; s < n_pairs; ++s) {
        long cx = omega[pick(rng)], cy = omega[pick(rng)];
        if (cx == cy) continue;
        Vec x = g.cell_center(cx), y = g.cell_center(cy);
        Vec d{x[0] - y[0], x[1] - y[1]};
        double dist = norm(d, g.dim);
        if (dist <= 0.0) continue;
        double quot = std::abs(gfield.cell_value(cx) - gfield.cell_value(cy)) /
                      std::pow(dist, rep.gamma);
        rep.holder_seminorm = std::max(rep.holder_seminorm, quot);
    }
    rep.ratio = rep.holder_seminorm > 0.0 ? rep.seminorm / rep.holder_seminorm : 0.0;
    return rep;
}

std::tuple<double, double, double> lipschitz_experiment(const ScalarField& u,
                                                        double p) {
    VectorField gu = discrete_gradient(u);
    double sup = 0.0;
    for (long c : cells_in_ball(u.grid, Ball{{0.0, 0.0}, 0.5}))
        sup = std::max(sup, norm(gu.at_cell(c), u.grid.dim));
    const double m = cell_measure(u.grid);
    double lp = 0.0;
    for (long c : cells_in_ball(u.grid, Ball{{0.0, 0.0}, 1.0}))
        lp += std::pow(norm(gu.at_cell(c), u.grid.dim), p) * m;
    lp = std::pow(lp, 1.0 / p);
    return {sup, lp, sup / (lp + 1.0)};
}

double free_boundary_lipschitz_experiment(const ScalarField& u, double p,
                                          double r0, double tau) {
    (void)p;
    if (u.at(0, 0) > tau)
        throw OriginNotInZeroSet(
            "free_boundary_lipschitz_experiment: u(0) exceeds the threshold");
    VectorField gu = discrete_gradient(u);
    double sup = 0.0;
    for (long c : cells_in_ball(u.grid, Ball{{0.0, 0.0}, r0}))
        sup = std::max(sup, norm(gu.at_cell(c), u.grid.dim));
    return sup;
}

DichotomyConstants dichotomy_constants(double p, int n, double eps, double eta,
                                       double C, double C1, double alpha) {
    if (p <= 1.0) throw InvalidExponent("dichotomy_constants: p must exceed 1");
    double two_p1 = std::pow(2.0, p - 1.0);
    double denom = std::pow(eps, p) - two_p1 * C * eta -
                   two_p1 * C1 * std::pow(eta, alpha * p);
    if (denom <= 0.0)
        throw DenominatorNonpositive(
            "dichotomy_constants: infeasible eta, gap = " + std::to_string(-denom));
    double base = two_p1 * C * std::pow(eta, -static_cast<double>(n)) / denom;
    DichotomyConstants mc{};
    if (p >= 2.0) {
        mc.M = std::pow(base, 1.0 / p);
        mc.sigma0 = std::pow(eta, n + 1.0);
    } else {
        mc.M = std::pow(base, 2.0 / (p * p));
        mc.sigma0 = std::pow(eta, (n + 1.0) * 2.0 / p);
    }
    return mc;
}

double dichotomy_chain_residual(double p, int n, double eps, double eta,
                                double C, double C1, double alpha,
                                const DichotomyConstants& mc) {
    double a = mc.M, sigma = mc.sigma0;
    double c4 = std::pow(2.0, 2.0 * (p - 1.0));
    double eta_n = std::pow(eta, -static_cast<double>(n));
    double ap = std::pow(a, p);
    double lhs;
    if (p >= 2.0)
        lhs = c4 * C * eta_n * sigma * ap + c4 * C * eta_n +
              c4 * C1 * ap * std::pow(eta, alpha * p);
    else
        lhs = c4 * C * eta_n * std::pow(sigma, 0.5 * p) * ap +
              c4 * C * eta_n * std::pow(a, p * (1.0 - 0.5 * p)) +
              c4 * C1 * ap * std::pow(eta, alpha * p);
    double rhs = std::pow(2.0, p - 1.0) * std::pow(eps, p) * ap;
    return (lhs - rhs) / rhs; // relative, so the 1e-12 scale is meaningful
}

double measure_alpha0(const ScalarField& v, double p) {
    const Grid& g = v.grid;
    const double h = g.h();
    VectorField gv = discrete_gradient(v);
    Vec q0 = affine_fit_gradient(v);
    std::vector<double> lr, lo;
    for (double r = 0.5; r >= 8.0 * h; r *= 0.5) {
        double osc = ball_average_shifted(gv, q0, Ball{{0.0, 0.0}, r}, p);
        if (osc <= 1e-14) continue;
        lr.push_back(std::log(r));
        lo.push_back(std::log(osc));
    }
    if (lr.size() < 2) return 1.0;
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < lr.size(); ++i) {
        mx += lr[i];
        my += lo[i];
    }
    mx /= lr.size();
    my /= lo.size();
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lr.size(); ++i) {
        num += (lr[i] - mx) * (lo[i] - my);
        den += (lr[i] - mx) * (lr[i] - mx);
    }
    double slope = den > 0.0 ? num / den : 1.0;
    return std::clamp(slope, 0.01, 1.0);
}

} // namespace fbl
