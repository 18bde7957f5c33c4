#include "fblab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbl {

double ScalarField::interpolate(const Vec& x) const {
    const double h = grid.h();
    const int E = grid.extent;
    auto clamp_cell = [&](double xi) {
        double s = xi / h;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, -E, E - 1);
        return i;
    };
    int i = clamp_cell(x[0]);
    double tx = x[0] / h - i;
    if (grid.dim == 1) {
        return (1 - tx) * at(i) + tx * at(i + 1);
    }
    int j = clamp_cell(x[1]);
    double ty = x[1] / h - j;
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
           (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
}

double ScalarField::cell_value(long c) const {
    int i, j;
    grid.cell_index(c, i, j);
    if (grid.dim == 1) return 0.5 * (at(i) + at(i + 1));
    return 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
}

double ScalarField::min_value() const { return *std::min_element(values.begin(), values.end()); }
double ScalarField::max_value() const { return *std::max_element(values.begin(), values.end()); }

Vec cell_gradient(const std::vector<double>& nodal, const Grid& g, long c) {
    int i, j;
    g.cell_index(c, i, j);
    const double inv_h = g.extent;
    const double u0 = nodal[static_cast<size_t>(g.node_id(i, j))];
    Vec grad{(nodal[static_cast<size_t>(g.node_id(i + 1, j))] - u0) * inv_h, 0.0};
    if (g.dim > 1)
        grad[1] = (nodal[static_cast<size_t>(g.node_id(i, j + 1))] - u0) * inv_h;
    return grad;
}

VectorField discrete_gradient(const ScalarField& u) {
    VectorField g(u.grid);
    const long nc = u.grid.cell_count();
    for (long c = 0; c < nc; ++c) g.set_cell(c, cell_gradient(u.values, u.grid, c));
    return g;
}

std::vector<long> cells_in_ball(const Grid& g, const Ball& B) {
    std::vector<long> cells;
    const double h = g.h();
    const int E = g.extent;
    auto range = [&](double c) {
        int lo = static_cast<int>(std::floor((c - B.radius) / h)) - 1;
        int hi = static_cast<int>(std::ceil((c + B.radius) / h)) + 1;
        return std::pair<int, int>{std::max(lo, -E), std::min(hi, E - 1)};
    };
    auto [ilo, ihi] = range(B.center[0]);
    const double r2 = B.radius * B.radius;
    if (g.dim == 1) {
        for (int i = ilo; i <= ihi; ++i) {
            double dx = (i + 0.5) * h - B.center[0];
            if (dx * dx < r2) cells.push_back(g.cell_id(i));
        }
        return cells;
    }
    auto [jlo, jhi] = range(B.center[1]);
    for (int j = jlo; j <= jhi; ++j) {
        double dy = (j + 0.5) * h - B.center[1];
        for (int i = ilo; i <= ihi; ++i) {
            double dx = (i + 0.5) * h - B.center[0];
            if (dx * dx + dy * dy < r2) cells.push_back(g.cell_id(i, j));
        }
    }
    std::sort(cells.begin(), cells.end());
    return cells;
}

namespace {

template <typename Value>
double averaged_power(const Grid& g, const Ball& B, double exponent, Value&& value_of) {
    if (exponent < 1.0) throw InvalidExponent("ball_average: exponent must be >= 1");
    auto cells = cells_in_ball(g, B);
    if (cells.empty()) throw EmptyBall("ball_average: no cell center falls in the ball");
    double sum = 0.0;
    for (long c : cells) sum += std::pow(std::abs(value_of(c)), exponent);
    return std::pow(sum / static_cast<double>(cells.size()), 1.0 / exponent);
}

} // namespace

double ball_average(const VectorField& g, const Ball& B, double exponent) {
    return averaged_power(g.grid, B, exponent,
                          [&](long c) { return norm(g.at_cell(c), g.grid.dim); });
}

double ball_average(const ScalarField& g, const Ball& B, double exponent) {
    return averaged_power(g.grid, B, exponent, [&](long c) { return g.cell_value(c); });
}

double ball_average_shifted(const VectorField& g, const Vec& q, const Ball& B, double exponent) {
    return averaged_power(g.grid, B, exponent, [&](long c) {
        Vec v = g.at_cell(c);
        v[0] -= q[0];
        if (g.grid.dim > 1) v[1] -= q[1];
        return norm(v, g.grid.dim);
    });
}

double ball_mean(const ScalarField& u, const Ball& B) {
    auto cells = cells_in_ball(u.grid, B);
    if (cells.empty()) throw EmptyBall("ball_mean: no cell center falls in the ball");
    double sum = 0.0;
    for (long c : cells) sum += u.cell_value(c);
    return sum / static_cast<double>(cells.size());
}

ScalarField rescale(const ScalarField& u, double r) {
    if (r <= 0.0 || r > 1.0)
        throw OutOfDomain("rescale: r must lie in (0,1], got " + std::to_string(r));
    if (r == 1.0) return u;
    ScalarField out(u.grid);
    const int E = u.grid.extent;
    const double h = u.grid.h();
    if (u.grid.dim == 1) {
        for (int i = -E; i <= E; ++i)
            out.at(i) = u.interpolate({r * i * h, 0.0}) / r;
    } else {
        for (int j = -E; j <= E; ++j)
            for (int i = -E; i <= E; ++i)
                out.at(i, j) = u.interpolate({r * i * h, r * j * h}) / r;
    }
    return out;
}

Vec affine_fit_gradient(const ScalarField& u, int ci, int cj) {
    const int E = u.grid.extent;
    if (std::abs(ci) > E - 1 || (u.grid.dim > 1 && std::abs(cj) > E - 1))
        throw OutOfDomain("affine_fit_gradient: stencil exceeds the grid");
    const double h = u.grid.h();
    if (u.grid.dim == 1) {
        return {(u.at(ci + 1) - u.at(ci - 1)) / (2 * h), 0.0};
    }
    double sx = 0.0, sy = 0.0;
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            double v = u.at(ci + di, cj + dj);
            sx += di * v;
            sy += dj * v;
        }
    return {sx / (6 * h), sy / (6 * h)};
}

void dump_csv(const ScalarField& u, std::ostream& os) {
    char buf[64];
    os << "dim,h,extent\n";
    std::snprintf(buf, sizeof(buf), "%.17g", u.grid.h());
    os << u.grid.dim << ',' << buf << ',' << u.grid.extent << '\n';
    const int n = u.grid.nodes_axis();
    const int rows = u.grid.dim == 1 ? 1 : n;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g",
                          u.values[static_cast<size_t>(r) * n + c]);
            os << buf << (c + 1 < n ? "," : "\n");
        }
    }
}

void dump_csv(const ScalarField& u, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("dump_csv: cannot open " + path);
    dump_csv(u, f);
}

ScalarField load_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("load_csv: empty stream");
    if (!std::getline(is, line)) throw std::runtime_error("load_csv: missing header row");
    int dim = 0, extent = 0;
    double h = 0.0;
    if (std::sscanf(line.c_str(), "%d,%lf,%d", &dim, &h, &extent) != 3)
        throw std::runtime_error("load_csv: malformed header: " + line);
    Grid g(dim, extent);
    ScalarField u(g);
    size_t idx = 0;
    while (std::getline(is, line) && idx < u.values.size()) {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',') && idx < u.values.size())
            u.values[idx++] = std::stod(tok);
    }
    if (idx != u.values.size())
        throw std::runtime_error("load_csv: value count mismatch");
    return u;
}

ScalarField load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path);
    return load_csv(f);
}

} // namespace fbl
