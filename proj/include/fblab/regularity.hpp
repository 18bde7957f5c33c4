#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "fblab/energy.hpp"
#include "fblab/grid.hpp"
#include "fblab/pharmonic.hpp"

namespace fbl {

/// Flat configuration around the affine model l(x) = b + q.x.
struct FlatnessState {
    Vec q{0.0, 0.0};
    double a = 0.0;   // L^p gradient average at the reference scale
    double eps = 0.0; // relative flatness (|grad u - q| average) / a
    double b = 0.0;   // intercept of the affine model
};

enum class DichotomyTag { Decay, Flat, NotApplicable, RawFailure };

struct DichotomyOutcome {
    DichotomyTag tag = DichotomyTag::NotApplicable;
    FlatnessState state; // Flat branch
    double a = 0.0;      // full-ball gradient average
    double a_eta = 0.0;  // small-ball gradient average (Decay / diagnostics)
    Vec q{0.0, 0.0};     // replacement slope at the center
    double flatness = 0.0; // absolute |grad u - q| average on the small ball
};

struct EnergyComparisonReport {
    double lhs = 0.0; // int |grad u - grad v|^p
    double rhs = 0.0; // branch-appropriate bound through gamma_hat
    double gap = 0.0; // int (|grad u|^p - |grad v|^p)
    bool pass = true;
    double residual = 0.0; // replacement weak-form residual
    long iterations = 0;
};

struct ImprovementResult {
    double rho;
    FlatnessState new_state;
    double zero_measure; // |{u = 0}| on the 9/10 ball
    double q_shift;      // |q_tilde - q|
    double ell_min;      // min of the incoming affine model over the 9/10 ball
};

struct DecayRow {
    int k;
    double a_k;
    Vec q_k;
    double flat_k; // relative to the base-scale a
};

struct DecayTrace {
    double rho = 0.5;
    double alpha = 0.5;
    std::vector<DecayRow> rows;
    bool pass = true;
    double slope_increment_sum = 0.0; // sum |q_{k+1} - q_k|
    bool truncated = false;           // resolution floor reached before K
};

struct CampanatoReport {
    double lambda = 0.0;
    double seminorm = 0.0;     // sup-over-balls mean-oscillation form
    double seminorm_inf = 0.0; // inf-over-constant variant
    double gamma = 0.0;        // (lambda - n)/p
    double holder_seminorm = 0.0;
    double ratio = 0.0; // seminorm / holder_seminorm
};

struct DichotomyConstants {
    double M;
    double sigma0;
};

struct RegOptions {
    double c_slack = 10.0; // slack(h) = c_slack * h
    SolverOptions solver;
    PositivityRule rule;
};

/// Energy comparison between u and its p-harmonic replacement on B, with the
/// sampled gamma_hat standing in for the universal constant. Integrals run
/// over the solver's cell set (cells touching the free nodes), which is the
/// set on which the discrete weak form is stationary.
EnergyComparisonReport check_energy_comparison(const ScalarField& u,
                                               const Ball& B, double p,
                                               double gamma_hat,
                                               const RegOptions& opt = {});

/// Decay-or-flatness trichotomy on the unit ball. C0_bar bounds the admissible
/// slope magnitude relative to a. RawFailure is a diagnostic outcome, not an
/// error.
DichotomyOutcome dichotomy_experiment(const ScalarField& u, double p, double eps,
                                      double eta, double M, double C0_bar = 10.0,
                                      const RegOptions& opt = {});

/// One improvement-of-flatness step: replacement in the 9/10 ball, slope
/// update q -> q_tilde from the replacement's center gradient, flatness
/// re-measured on the rho ball.
ImprovementResult improvement_step(const ScalarField& u,
                                   const FlatnessState& state, double p,
                                   double rho, double C0 = 10.0,
                                   const RegOptions& opt = {});

/// Iterates the improvement step across dyadic scales rho^k, rescaling the
/// base field at each scale. K is truncated at the resolution floor
/// rho^K >= 8h.
DecayTrace dyadic_decay_track(const ScalarField& u, double p, double eps,
                              double rho, double alpha, int K,
                              const RegOptions& opt = {});

/// Campanato seminorm of the cell-valued samples of g over balls
/// B_r(center) intersected with the unit ball, plus the sampled Holder
/// difference-quotient seminorm at gamma = (lambda - n)/p.
CampanatoReport campanato_seminorm(const ScalarField& g, double p, double lambda,
                                   const std::vector<double>& radii,
                                   const std::vector<Vec>& centers,
                                   long n_pairs = 20000,
                                   std::uint64_t seed = 1);

/// (sup over B_{1/2} of |grad u|, ||grad u||_{L^p(B_1)}, sup/(norm + 1)).
std::tuple<double, double, double> lipschitz_experiment(const ScalarField& u,
                                                        double p);

/// sup of |grad u| over B_{r0}; requires u(0) <= tau.
double free_boundary_lipschitz_experiment(const ScalarField& u, double p,
                                          double r0, double tau = 0.0);

/// The dichotomy proof's explicit (M, sigma0) for measured C, C1, alpha.
DichotomyConstants dichotomy_constants(double p, int n, double eps, double eta,
                                       double C, double C1, double alpha);

/// Signed residual (lhs - rhs) of the proof's inequality chain evaluated at
/// a = M, sigma = sigma0; feasible inputs give a residual <= 0 (zero up to
/// rounding, since the chain telescopes to equality there).
double dichotomy_chain_residual(double p, int n, double eps, double eta,
                                double C, double C1, double alpha,
                                const DichotomyConstants& mc);

/// Log-log slope of the replacement's gradient oscillation around its center
/// slope, an empirical stand-in for the interior Holder exponent.
double measure_alpha0(const ScalarField& v, double p);

} // namespace fbl
