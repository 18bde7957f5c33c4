#include "fblab/profiles.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fbl {

std::pair<std::string, std::map<std::string, double>> parse_profile_spec(
    const std::string& spec) {
    std::string name = spec;
    std::map<std::string, double> params;
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        name = spec.substr(0, colon);
        std::stringstream ss(spec.substr(colon + 1));
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("profile spec: expected key=value, got " + kv);
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
    }
    return {name, params};
}

namespace {

double get(const std::map<std::string, double>& m, const std::string& k,
           double fallback) {
    auto it = m.find(k);
    return it == m.end() ? fallback : it->second;
}

ScalarField fill(const Grid& g, const std::function<double(double, double)>& f) {
    ScalarField u(g);
    const int E = g.extent;
    const double h = g.h();
    for (int j = g.dim > 1 ? -E : 0; j <= (g.dim > 1 ? E : 0); ++j)
        for (int i = -E; i <= E; ++i)
            u.at(i, j) = f(i * h, j * h);
    return u;
}

} // namespace

ScalarField make_profile(const Grid& g, const std::string& spec) {
    auto [name, prm] = parse_profile_spec(spec);
    const int dim = g.dim;

    if (name == "zero") return ScalarField(g);
    if (name == "affine") {
        double A = get(prm, "A", 0.5), b = get(prm, "b", 0.0);
        return fill(g, [=](double x, double) { return b + A * (x + 1.0) * 0.5; });
    }
    if (name == "linear") {
        double q1 = get(prm, "q1", 1.0), q2 = get(prm, "q2", 0.0),
               b = get(prm, "b", 0.0);
        return fill(g, [=](double x, double y) { return b + q1 * x + q2 * y; });
    }
    if (name == "cone") {
        double A = get(prm, "A", 1.0), x0 = get(prm, "x0", 0.0),
               y0 = get(prm, "y0", 0.0);
        return fill(g, [=](double x, double y) {
            return A * std::hypot(x - x0, dim > 1 ? y - y0 : 0.0);
        });
    }
    if (name == "bump") {
        double A = get(prm, "A", 1.0), w = get(prm, "w", 0.5),
               x0 = get(prm, "x0", 0.0), y0 = get(prm, "y0", 0.0);
        return fill(g, [=](double x, double y) {
            double s = std::hypot(x - x0, dim > 1 ? y - y0 : 0.0) / w;
            if (s >= 1.0) return 0.0;
            return A * std::exp(1.0 - 1.0 / (1.0 - s * s));
        });
    }
    if (name == "fourier") {
        auto seed = static_cast<std::uint64_t>(get(prm, "seed", 1.0));
        int modes = static_cast<int>(get(prm, "modes", 5.0));
        double amp = get(prm, "amp", 1.0), b = get(prm, "b", 0.0);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        struct Mode {
            double a, kx, ky, phase;
        };
        std::vector<Mode> ms;
        for (int m = 1; m <= modes; ++m) {
            double theta = dim > 1 ? angle(rng) : 0.0;
            double freq = 0.5 * M_PI * m;
            ms.push_back({amp * gauss(rng) / m, freq * std::cos(theta),
                          dim > 1 ? freq * std::sin(theta) : 0.0, angle(rng)});
        }
        return fill(g, [=](double x, double y) {
            double v = b;
            for (const auto& m : ms)
                v += m.a * std::sin(m.kx * x + m.ky * y + m.phase);
            return v;
        });
    }
    if (name == "harmonic-poly") {
        double A = get(prm, "A", 1.0), b = get(prm, "b", 0.0);
        if (dim == 1) return fill(g, [=](double x, double) { return b + A * x; });
        return fill(g, [=](double x, double y) { return b + A * (x * x - y * y); });
    }
    if (name == "sin") {
        double A = get(prm, "A", 1.0), omega = get(prm, "omega", 40.0),
               b = get(prm, "b", 0.0);
        return fill(g, [=](double x, double) {
            return b + A * std::sin(omega * x) / omega;
        });
    }
    if (name == "sqrtabs") {
        double A = get(prm, "A", 1.0);
        return fill(g, [=](double x, double) { return A * std::sqrt(std::abs(x)); });
    }
    if (name == "flat2d") {
        double b = get(prm, "b", 1.0), q1 = get(prm, "q1", 1.0),
               q2 = get(prm, "q2", 0.0), delta = get(prm, "delta", 0.05);
        return fill(g, [=](double x, double y) {
            double yy = dim > 1 ? y : 0.0;
            double re4 = x * x * x * x - 6.0 * x * x * yy * yy + yy * yy * yy * yy;
            return b + q1 * x + q2 * yy + delta * re4;
        });
    }
    throw std::runtime_error("make_profile: unknown profile '" + name + "'");
}

} // namespace fbl
