#pragma once

#include <array>
#include <vector>

#include "vck/generator.hpp"

namespace vck {

struct StationaryResult {
    DensityField M;            // mass 1, entries >= 0
    double residual_inf = 0.0; // ||L M||_inf of the unmodified generator
    double clip_magnitude = 0.0; // most negative raw entry (reported, then clipped)
    double clipped_mass = 0.0;   // total mass removed by clipping
    int pivot_row = -1;          // row replaced by the mass constraint
    bool ok = false;
};

// Null-space solve for the frozen-rate stationary state: one generator row is
// replaced by the mass constraint (bordered solve with a single refinement
// pass), pivoting on the cell carrying the largest equilibrium mass.
StationaryResult solve_stationary(const Grid& g, const ModelParams& p, double N,
                                  int pivot_row_hint = -1);

// Independent oracle: inverse-power iteration on the generator.
DensityField stationary_inverse_power(const Grid& g, const ModelParams& p, double N,
                                      int iters = 8);

// The steady-state firing-rate map N -> firing_rate(M_N).
double lambda_star(const Grid& g, const ModelParams& p, double N, int pivot_row_hint = -1);

struct FixedPointResult {
    double N_sharp = 0.0;
    DensityField M;
    int iterations = 0;
    bool converged = false;
    double residual_fixed = 0.0;    // |lambda_star(N_sharp) - N_sharp|
    double residual_pde_inf = 0.0;  // nonlinear stationary residual in max norm
    bool weak_connectivity_warning = false;
    std::vector<std::array<double, 3>> log; // iter, N, residual
};

// Damped iteration N <- (1-theta) N + theta lambda_star(N) from N = 0.
FixedPointResult fixed_point_steady(const Grid& g, const ModelParams& p, double tol = 1e-12,
                                    int max_iters = 200, double theta = 0.5);

} // namespace vck
