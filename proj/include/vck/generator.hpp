#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Sparse>

#include "vck/grid.hpp"

namespace vck {

// Discrete generator for frozen coefficients: donor-cell upwind transport in
// v with the spiking-boundary reset re-injection, and an exponential-fitting
// (Chang-Cooper) drift-diffusion stencil in y with zero-total-flux ends.
//
// The assembled object is immutable. It carries both structured kernels
// (OpenMP-parallel, used by the time steppers) and the assembled sparse
// matrices (the serial reference path, also used for direct solves, export
// and dense oracles).
struct GeneratorOperator {
    Grid grid;
    ModelParams params;
    double N_frozen = 0.0;
    Coefficients coeffs;

    // J at v-interfaces, row-major per y-row: J_iface[j*(n_v+1) + i].
    std::vector<double> J_iface;
    // Interior y-interface flux coefficients: flux_{j+1/2} = lo[j] F_j - hi[j] F_{j+1}.
    std::vector<double> diff_lo, diff_hi;

    double max_abs_J = 0.0;       // over all v-interface values
    double max_abs_diag_T = 0.0;
    double max_abs_diag_D = 0.0;
    double max_abs_diag_L = 0.0;

    Eigen::SparseMatrix<double> T; // transport + reset
    Eigen::SparseMatrix<double> D; // drift-diffusion in y
    Eigen::SparseMatrix<double> L; // T + D

    // Structured kernels (out = op * f). out may not alias f.
    void apply(const double* f, double* out) const;
    void apply_transport(const double* f, double* out) const;
    void apply_diffusion_add(const double* f, double* out) const; // out += D f

    // Serial reference via the assembled sparse matrix.
    void apply_reference(const double* f, double* out) const;

    double firing_rate(const DensityField& f) const;
};

GeneratorOperator assemble_generator(const Grid& g, const ModelParams& p, double N);

// Chang-Cooper flux coefficients for the interior y-interfaces. Cheap to
// recompute when the firing rate changes; the transport part never does.
void compute_diffusion_coeffs(const Grid& g, const Coefficients& co,
                              std::vector<double>& lo, std::vector<double>& hi);

// Discrete firing rate: sum of reset fluxes through the v = v_F interface.
double firing_rate(const Grid& g, const ModelParams& p, const DensityField& f);

// Cached forward-elimination data for the implicit y-solve (I - dt D),
// shared by every v-column since the y-coefficients do not depend on v.
struct ImplicitDiffusion {
    double dt = 0.0;
    std::vector<double> sub;     // sub-diagonal of (I - dt D)
    std::vector<double> cprime;  // eliminated super-diagonal
    std::vector<double> inv_den; // reciprocal pivots
};

ImplicitDiffusion prepare_implicit_diffusion(const Grid& g, const std::vector<double>& lo,
                                             const std::vector<double>& hi, double dt);
ImplicitDiffusion prepare_implicit_diffusion(const GeneratorOperator& op, double dt);

// Solves (I - dt D) x = rhs, one tridiagonal sweep per v-column.
void solve_implicit_diffusion(const Grid& g, const ImplicitDiffusion& w,
                              const double* rhs, double* x);

// out += D f for externally supplied flux coefficients.
void apply_diffusion_add(const Grid& g, const std::vector<double>& lo,
                         const std::vector<double>& hi, const double* f, double* out);

// Triplet dump (row,col,value) of the full generator.
void export_triplets_csv(const GeneratorOperator& op, std::ostream& os);

} // namespace vck
