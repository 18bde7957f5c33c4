#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fblab/errors.hpp"

namespace fbl {

/// Point / vector in domain coordinates. Second component unused when dim == 1.
using Vec = std::array<double, 2>;

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = a[0] * b[0];
    if (dim > 1) s += a[1] * b[1];
    return s;
}

inline double norm(const Vec& a, int dim) {
    return std::sqrt(dot(a, a, dim));
}

/// Uniform lattice on [-1,1]^dim. Nodes sit at integer multiples of h;
/// cells are indexed by their low corner, with centers at (i+1/2)h.
struct Grid {
    int dim;
    int extent; // half-width in units of h; h = 1/extent

    Grid(int dim_, int extent_) : dim(dim_), extent(extent_) {
        if (dim != 1 && dim != 2)
            throw OutOfDomain("Grid: dim must be 1 or 2, got " + std::to_string(dim_));
        if (extent < 2)
            throw OutOfDomain("Grid: extent must be >= 2");
    }

    double h() const { return 1.0 / extent; }
    int nodes_axis() const { return 2 * extent + 1; }
    int cells_axis() const { return 2 * extent; }
    long node_count() const {
        long n = nodes_axis();
        return dim == 1 ? n : n * n;
    }
    long cell_count() const {
        long n = cells_axis();
        return dim == 1 ? n : n * n;
    }

    // i, j are signed lattice indices: nodes in [-extent, extent],
    // cell low corners in [-extent, extent-1].
    long node_id(int i, int j = 0) const {
        long ii = i + extent;
        if (dim == 1) return ii;
        return static_cast<long>(j + extent) * nodes_axis() + ii;
    }
    long cell_id(int i, int j = 0) const {
        long ii = i + extent;
        if (dim == 1) return ii;
        return static_cast<long>(j + extent) * cells_axis() + ii;
    }
    void cell_index(long c, int& i, int& j) const {
        if (dim == 1) {
            i = static_cast<int>(c) - extent;
            j = 0;
        } else {
            i = static_cast<int>(c % cells_axis()) - extent;
            j = static_cast<int>(c / cells_axis()) - extent;
        }
    }
    Vec node_pos(int i, int j = 0) const { return {i * h(), dim > 1 ? j * h() : 0.0}; }
    Vec cell_center(long c) const {
        int i, j;
        cell_index(c, i, j);
        return {(i + 0.5) * h(), dim > 1 ? (j + 0.5) * h() : 0.0};
    }

    bool operator==(const Grid& o) const { return dim == o.dim && extent == o.extent; }
};

struct Ball {
    Vec center{0.0, 0.0};
    double radius = 1.0;
};

/// Nodal grid function, units of length.
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<size_t>(g.node_count()), fill) {}

    double& at(int i, int j = 0) { return values[static_cast<size_t>(grid.node_id(i, j))]; }
    double at(int i, int j = 0) const { return values[static_cast<size_t>(grid.node_id(i, j))]; }

    /// Multilinear interpolation at an arbitrary point of [-1,1]^dim.
    double interpolate(const Vec& x) const;

    /// Average of the 2^dim corner values of cell c.
    double cell_value(long c) const;

    double min_value() const;
    double max_value() const;
};

/// Cell-centered vector field (one dim-vector per cell), dimensionless.
struct VectorField {
    Grid grid;
    std::vector<double> values; // cell-major, dim components per cell

    explicit VectorField(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<size_t>(g.cell_count()) * g.dim, fill) {}

    Vec at_cell(long c) const {
        Vec v{values[static_cast<size_t>(c) * grid.dim], 0.0};
        if (grid.dim > 1) v[1] = values[static_cast<size_t>(c) * grid.dim + 1];
        return v;
    }
    void set_cell(long c, const Vec& v) {
        values[static_cast<size_t>(c) * grid.dim] = v[0];
        if (grid.dim > 1) values[static_cast<size_t>(c) * grid.dim + 1] = v[1];
    }
};

/// Forward differences from the cell's low corner, one value per cell.
/// Exact for affine fields; at p = 2 the induced stationarity system is the
/// 5-point Laplacian.
VectorField discrete_gradient(const ScalarField& u);

/// Gradient of cell c computed directly from nodal values (same stencil as
/// discrete_gradient, without materializing the field).
Vec cell_gradient(const std::vector<double>& nodal, const Grid& g, long c);

/// Cells whose center lies in the open ball, in increasing flat-index order.
std::vector<long> cells_in_ball(const Grid& g, const Ball& B);

inline double cell_measure(const Grid& g) { return std::pow(g.h(), g.dim); }

/// (mean over in-ball cells of |g|^exponent)^(1/exponent).
double ball_average(const VectorField& g, const Ball& B, double exponent);
double ball_average(const ScalarField& g, const Ball& B, double exponent);
/// Same, for |g - q|.
double ball_average_shifted(const VectorField& g, const Vec& q, const Ball& B, double exponent);

/// Plain mean of cell values over the ball (no exponent).
double ball_mean(const ScalarField& u, const Ball& B);

/// u_r(x) = u(rx)/r on the same grid, multilinear interpolation.
ScalarField rescale(const ScalarField& u, double r);

/// Least-squares affine fit of the slope over the 3^dim-node neighborhood of
/// node (ci, cj); exact on affine fields.
Vec affine_fit_gradient(const ScalarField& u, int ci = 0, int cj = 0);

// Plain-text CSV round trip: header dim,h,extent then row-major nodal values.
void dump_csv(const ScalarField& u, std::ostream& os);
void dump_csv(const ScalarField& u, const std::string& path);
ScalarField load_csv(std::istream& is);
ScalarField load_csv(const std::string& path);

} // namespace fbl
