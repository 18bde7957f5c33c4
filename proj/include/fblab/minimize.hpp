#pragma once

#include <cstdint>
#include <vector>

#include "fblab/energy.hpp"
#include "fblab/grid.hpp"
#include "fblab/pharmonic.hpp"

namespace fbl {

struct AlmostMinParams {
    double kappa = 0.0;
    double beta = 1.0;
};

struct MinimizeReport {
    ScalarField u;
    long outer_iterations = 0;
    double final_energy = 0.0; // J_p(u, B): in-ball Dirichlet + volume
    long active_set_changes = 0;
    std::vector<double> energy_trace; // internal objective, non-increasing
};

struct MinimizeOptions {
    double tol = 1e-10;          // outer-loop energy decrease threshold
    long max_alternations = 200;
    long max_flips = 1 << 20;
    int flip_window = 6;         // half-width in nodes of the 2D re-solve window
    SolverOptions solver;
};

/// Alternating active-set minimization of J_p over fields equal to `boundary`
/// outside the open ball, u >= 0 inside. Single-node flips with a local
/// re-solve are applied after the alternation converges, so the result is a
/// fixed point for single-node moves up to tolerance.
MinimizeReport minimize_jp(const ScalarField& boundary, const Ball& B, double p,
                           const MinimizeOptions& opt = {},
                           const PositivityRule& rule = {});

enum class PhiShape { Zero, Clamp, Smoothstep };

struct PhiSpec {
    PhiShape shape = PhiShape::Clamp;
    double scale = 1.0; // Phi saturates at t >= scale
};

double phi(const PhiSpec& spec, double t);
double phi_prime(const PhiSpec& spec, double t);

/// Minimizes J_p plus the pairwise nonlocal term
/// sum_{y,z cells} Phi(u(y)) Phi(u(z)) Phi(u(y)-u(z)) h^{2 dim}.
/// The minimizer is an almost minimizer of J_p with kappa = vol(B_1),
/// beta = dim.
std::pair<MinimizeReport, AlmostMinParams> make_nonlocal_almost_minimizer(
    const ScalarField& boundary, const Ball& B, double p, const PhiSpec& spec,
    const MinimizeOptions& opt = {}, const PositivityRule& rule = {});

struct BallCheck {
    Ball ball;
    double ju = 0.0;
    double jv = 0.0;
    double ratio = 0.0;
    double allowed = 0.0;
    bool pass = true;
};

struct AlmostMinReport {
    std::vector<BallCheck> balls;
    double worst_ratio = 0.0;
    long worst_index = -1;
    bool pass = true;
};

struct VerifyOptions {
    double c_slack = 10.0; // slack(h) = c_slack * h
    MinimizeOptions minimize;
};

/// Samples n_balls random balls with closure inside [-1,1]^dim (radii
/// log-uniform in [4h, boundary distance]), computes the constrained J_p
/// minimizer on each and checks J_p(u,B) <= (1 + kappa r^beta) J_p(v,B) up to
/// slack(h).
AlmostMinReport verify_almost_min(const ScalarField& u,
                                  const AlmostMinParams& params, double p,
                                  long n_balls, std::uint64_t seed,
                                  const VerifyOptions& opt = {},
                                  const PositivityRule& rule = {});

/// Volume of the unit ball in the given dimension.
double unit_ball_volume(int dim);

} // namespace fbl
