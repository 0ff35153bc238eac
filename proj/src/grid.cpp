#include "vck/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace vck {

namespace {

// Distance from y_F to the nearest cell interface of spacing dy.
double interface_gap(double y_F, double dy) {
    const double r = y_F / dy;
    return std::abs(r - std::round(r)) * dy;
}

} // namespace

Grid build_grid(const ModelParams& p, int n_v, int n_y, double y_max) {
    p.validate();
    if (n_v < 4 || n_y < 4)
        throw std::invalid_argument("build_grid: requires n_v, n_y >= 4");
    const double yF = p.y_F();
    if (!(y_max > 2.0 * yF))
        throw std::invalid_argument("build_grid: requires y_max > 2*y_F (reset band would be truncated)");

    Grid g;
    g.n_v = n_v;
    g.n_y = n_y;
    g.v_F = p.v_F;
    g.y_F = yF;
    g.y_max = y_max;

    // Nudge the truncation height until y_F clears all interfaces.
    double dy = g.y_max / n_y;
    int guard = 0;
    while (interface_gap(yF, dy) < 1e-12 * dy) {
        g.y_max *= 1.0 + 1e-6;
        dy = g.y_max / n_y;
        if (++guard > 64)
            throw std::runtime_error("build_grid: failed to nudge y_F off a cell interface");
    }

    g.dv = p.v_F / n_v;
    g.dy = dy;
    g.vc.resize(n_v);
    g.yc.resize(n_y);
    for (int i = 0; i < n_v; ++i) g.vc[i] = (i + 0.5) * g.dv;
    for (int j = 0; j < n_y; ++j) g.yc[j] = (j + 0.5) * g.dy;

    g.j_F = n_y; // no reset band if y_F above the grid (excluded by precondition)
    for (int j = 0; j < n_y; ++j) {
        if (g.yc[j] > yF) { g.j_F = j; break; }
    }
    return g;
}

DensityField zero_field(const Grid& g) {
    DensityField f;
    f.values.assign(static_cast<size_t>(g.size()), 0.0);
    return f;
}

double mass(const Grid& g, const DensityField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * g.cell_measure();
}

void normalize_mass(const Grid& g, DensityField& f) {
    const double m = mass(g, f);
    if (!(m > 0.0)) throw std::invalid_argument("normalize_mass: field has nonpositive mass");
    for (double& v : f.values) v /= m;
}

double top_band_mass(const Grid& g, const DensityField& f) {
    const int j0 = g.n_y - std::max(1, g.n_y / 10);
    double s = 0.0;
    for (int j = j0; j < g.n_y; ++j)
        for (int i = 0; i < g.n_v; ++i) s += f.values[g.idx(i, j)];
    return s * g.cell_measure();
}

} // namespace vck
