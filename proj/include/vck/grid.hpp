#pragma once

#include <vector>

#include "vck/model.hpp"

namespace vck {

// Uniform cell-centered grid on the truncated domain (0,v_F) x (0,y_max).
struct Grid {
    int n_v = 0;
    int n_y = 0;
    double v_F = 0.0;
    double y_max = 0.0;
    double dv = 0.0;
    double dy = 0.0;
    std::vector<double> vc; // cell centers in v
    std::vector<double> yc; // cell centers in y
    int j_F = 0;            // first y-row whose center exceeds y_F
    double y_F = 0.0;

    int size() const { return n_v * n_y; }
    int idx(int i, int j) const { return j * n_v + i; }
    double cell_measure() const { return dv * dy; }
};

// Builds the grid; nudges y_max by one part in 1e6 while y_F falls within
// 1e-12*dy of a cell interface, so the upwind direction at the spiking
// boundary is never ambiguous. Rejects y_max <= 2 y_F and counts < 4.
Grid build_grid(const ModelParams& p, int n_v, int n_y, double y_max);

// Cell-averaged density with a time stamp.
struct DensityField {
    std::vector<double> values;
    double time = 0.0;
};

DensityField zero_field(const Grid& g);

double mass(const Grid& g, const DensityField& f);

// Scales the field to total mass 1 (throws on zero mass).
void normalize_mass(const Grid& g, DensityField& f);

// Mass sitting in the top 10% of y-rows; monitors truncation quality.
double top_band_mass(const Grid& g, const DensityField& f);

} // namespace vck
