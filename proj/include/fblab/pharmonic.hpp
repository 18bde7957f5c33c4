#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "fblab/grid.hpp"

namespace fbl {

struct SolverOptions {
    double tol = 1e-11;        // relative energy decrease per outer sweep
    long max_outer = 400;      // Picard sweep cap
    long max_cg = 0;           // 0 = auto (10x free node count)
    double delta_reg = -1.0;   // <0 = auto: 1e-8 x gradient scale of the data
};

struct ReplacementResult {
    ScalarField v;
    long iterations = 0;   // outer Picard sweeps
    double residual = 0.0; // max nodal defect of the unregularized weak form
    double energy = 0.0;   // sum over in-ball cells of |grad v|^p h^dim
};

/// Minimizer of the Dirichlet p-energy over fields agreeing with u outside the
/// open ball B.
ReplacementResult p_harmonic_replacement(const ScalarField& u, const Ball& B,
                                         double p, double tol = 1e-11,
                                         double delta_reg = -1.0);
ReplacementResult p_harmonic_replacement(const ScalarField& u, const Ball& B,
                                         double p, const SolverOptions& opt);

/// Explicit ellipticity sandwich for the averaged Jacobian of z -> |z|^{p-2}z
/// under the |eta| < |q|/2 hypothesis.
struct EllipticityBounds {
    double lambda;
    double Lambda;
};
EllipticityBounds ellipticity_bounds(double p);

struct Mat2 {
    double a00 = 0.0, a01 = 0.0, a11 = 0.0; // symmetric; a11 unused in 1D
};

/// Cell-centered symmetric matrix field.
struct MatrixField {
    Grid grid;
    std::vector<Mat2> values;

    explicit MatrixField(const Grid& g)
        : grid(g), values(static_cast<size_t>(g.cell_count())) {}
};

/// Eigenvalues of a symmetric matrix, ascending. In 1D the second entry
/// duplicates the first.
std::pair<double, double> sym_eigenvalues(const Mat2& m, int dim);

/// A(x) = int_0^1 DF(q + t eta(x)) dt by Gauss-Legendre quadrature in t, with
/// DF(z) = (p-2)|z|^{p-4} z (x) z + |z|^{p-2} Id.
MatrixField averaged_jacobian(const Vec& q, const VectorField& eta, double p,
                              int quad_nodes = 8);

/// (sup over the half-radius ball of |grad v|, L^p average over B, their ratio).
std::tuple<double, double, double> interior_gradient_bound_check(
    const ScalarField& v, const Ball& B, double p);

/// Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& nodes,
                       std::vector<double>& weights);

namespace detail {

/// Minimizes sum over `cells` of (|grad x|^2 + delta^2)^{p/2} h^dim over the
/// nodes flagged free, in place. Returns the sweep count.
long solve_p_dirichlet(std::vector<double>& nodal, const Grid& g,
                       const std::vector<long>& cells,
                       const std::vector<std::uint8_t>& free_mask, double p,
                       const SolverOptions& opt);

/// Unregularized energy sum over `cells` of |grad x|^p h^dim.
double dirichlet_energy(const std::vector<double>& nodal, const Grid& g,
                        const std::vector<long>& cells, double p);

/// Max over free nodes of the unregularized weak-form defect
/// |sum_c |grad x|^{p-2} grad x . d(grad x)/d(node) h^dim|.
double weak_residual(const std::vector<double>& nodal, const Grid& g,
                     const std::vector<long>& cells,
                     const std::vector<std::uint8_t>& free_mask, double p);

/// delta_reg resolution: opt.delta_reg if nonnegative, else
/// 1e-8 x max(1, max |grad| over `cells`).
double resolve_delta(const std::vector<double>& nodal, const Grid& g,
                     const std::vector<long>& cells, const SolverOptions& opt);

/// Cells with at least one corner among the free nodes.
std::vector<long> cells_touching(const Grid& g,
                                 const std::vector<std::uint8_t>& free_mask);

/// Nodes strictly inside the open ball and strictly inside the grid: the free
/// set of p_harmonic_replacement.
std::vector<std::uint8_t> ball_free_mask(const Grid& g, const Ball& B);

} // namespace detail

} // namespace fbl
