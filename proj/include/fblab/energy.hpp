#pragma once

#include <cstdint>
#include <utility>

#include "fblab/grid.hpp"

namespace fbl {

/// The two terms of J_p over a ball plus their sum.
struct EnergyBreakdown {
    double dirichlet = 0.0; // sum |grad u|^p h^dim over in-ball cells
    double volume = 0.0;    // measure of active cells in the ball
    double total = 0.0;     // dirichlet + volume
};

/// A cell counts as part of {u > 0} iff all its corner values exceed tau.
struct PositivityRule {
    double tau = 0.0;
};

bool cell_active(const ScalarField& u, long c, const PositivityRule& rule);

EnergyBreakdown eval_jp(const ScalarField& u, const Ball& B, double p,
                        const PositivityRule& rule = {});

/// vol(B on grid) minus the active-cell measure.
double zero_set_measure(const ScalarField& u, const Ball& B,
                        const PositivityRule& rule = {});

/// lhs = (|xi|^{p-2}xi - |zeta|^{p-2}zeta) . (xi - zeta); bound is the
/// branch-dependent lower bound with gamma = 1 (caller applies its own gamma):
/// |xi-zeta|^2 (|xi|+|zeta|)^{p-2} for 1<p<2, |xi-zeta|^p for p>=2.
std::pair<double, double> monotonicity_gap(const Vec& xi, const Vec& zeta,
                                           double p, int dim);

/// min over n_samples random unit-scale pairs of lhs/bound; a concrete stand-in
/// for the universal constant the inequality only asserts to exist.
double estimate_gamma(double p, int dim, long n_samples, std::uint64_t seed);

} // namespace fbl
