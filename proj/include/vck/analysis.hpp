#pragma once

#include <vector>

#include "vck/evolve.hpp"

namespace vck {

// Weight table over cell centers; the norm exponent enters the twisted
// variant (use infinity for sup-norm tables).
std::vector<double> tabulate_weight(const Grid& g, const ModelParams& p, const WeightSpec& w,
                                    double p_exponent);

struct NormReport {
    double p = 1.0;
    WeightSpec weight;
    double value = 0.0;
};

// Discrete L^p norm of F * omega with cell measure; p in [1, inf].
NormReport weighted_norm(const Grid& g, const ModelParams& p, const DensityField& f,
                         double p_exp, const WeightSpec& w);

struct DecayFit {
    double lambda_hat = 0.0;
    double C_hat = 0.0;
    double r2 = 0.0;
    int usable = 0;
    bool underflow = false;
};

// Least-squares fit of log(norm) against t over the tail window (last 60% of
// the samples). Norms below 100 eps relative to the first sample are dropped;
// fewer than 5 usable points reports underflow.
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& norms);

// Convenience: norms of F_t - reference along a trajectory's snapshots.
DecayFit fit_decay_rate(const Grid& g, const ModelParams& p, const Trajectory& traj,
                        const DensityField& reference, double p_exp, const WeightSpec& w);

// Power-law fit of y against x on log-log axes (slope, r2).
struct PowerFit {
    double exponent = 0.0;
    double r2 = 0.0;
    int usable = 0;
    bool ok = false;
};

struct SmoothingCurve {
    std::vector<double> t;
    std::vector<double> ratio; // ||F_t||_{Linf_w} / ||F_0||_{L1_w}
    double ceiling = 0.0;      // 1/(dv dy), the single-cell resolution limit
    double nu_hat = 0.0;
    double r2 = 0.0;
    bool fit_ok = false;
};

// Ultracontractivity diagnostic: evolve a single-cell initial mass under the
// frozen linear flow and tabulate the Linf_w / L1_w smoothing ratio at the
// requested times. Fits t^{-nu} over the window between the grid ceiling and
// the equilibrium plateau. Requires an exponential weight.
SmoothingCurve smoothing_curve(const Grid& g, const ModelParams& p, int i0, int j0,
                               const std::vector<double>& times, const WeightSpec& w,
                               const EvolveConfig& cfg);

// Cells of O_eps = {dist(v, boundary) > eps, y < 1/eps}, whole cells only.
std::vector<int> region_cells(const Grid& g, double eps);

struct HarnackReport {
    double sup_T0 = 0.0;
    double inf_T = 0.0;
    double ratio = 0.0;
    bool infinite = false;
    std::vector<int> zero_cells; // cells where F_T vanishes on O_eps
};

HarnackReport harnack_ratio(const Grid& g, const DensityField& F_T0, const DensityField& F_T,
                            double eps);

// Locates the snapshots nearest to T0 and T in the trajectory.
HarnackReport harnack_ratio(const Grid& g, const Trajectory& traj, double eps, double T0,
                            double T);

struct GrowthBoundReport {
    double kappa_hat = 0.0;
    bool finite = false;
    double kappa_p1 = 0.0, kappa_p2 = 0.0, kappa_pinf = 0.0;
};

// Measured discrete growth constant: max over random nonnegative initial
// data, sample times and p in {1,2,inf} of log(||f_t||/||f_0||)/t in the
// twisted weight. Requires w.twist.
GrowthBoundReport growth_bound_certificate(const Grid& g, const ModelParams& p,
                                           const WeightSpec& w, int trials, uint64_t seed,
                                           const EvolveConfig& cfg);

// Dense eigensolve oracle: second-largest real part of the generator's
// spectrum (the leading eigenvalue is 0). Intended for grids <= 24x24.
double spectral_gap_dense(const GeneratorOperator& op);

} // namespace vck
