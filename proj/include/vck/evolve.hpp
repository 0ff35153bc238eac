#pragma once

#include <optional>
#include <vector>

#include "vck/generator.hpp"

namespace vck {

enum class Scheme { explicit_euler, imex };

struct PicardOpts {
    int max_iters = 50;
    double tol = 1e-10; // sup-norm tolerance on the firing-rate trajectory
};

struct EvolveConfig {
    double dt = 0.0;            // 0 selects cfl_safety * dv / max|J|
    double t_end = 10.0;
    Scheme scheme = Scheme::imex;
    double cfl_safety = 0.5;
    double blowup_factor = 1e6; // terminate when ||F||_inf exceeds this times ||F0||_inf
    int snapshot_stride = 0;    // 0 keeps only the first and last snapshot
    WeightSpec diag_weight{};   // weight used for the per-step Linf_w diagnostic
    double eta_smallness = std::numeric_limits<double>::quiet_NaN(); // NaN = auto
    PicardOpts picard{};
};

// Firing-rate samples along a run. N[k] is the output rate of the solution
// at t[k]; injected_mass[k] = dt * N[k] is the reset mass moved during step
// k, identical to the mass extracted at v = v_F by construction.
struct FiringTrace {
    std::vector<double> t;
    std::vector<double> N;
    std::vector<double> injected_mass;
};

struct Trajectory {
    std::vector<double> times;           // snapshot times
    std::vector<DensityField> snapshots; // per stride, plus first and last
    FiringTrace trace;
    std::vector<double> mass_t;   // per-step total mass, aligned with trace.t
    std::vector<double> linf_w_t; // per-step weighted sup norm, same alignment
    double dt = 0.0;
    bool blew_up = false;
    double blowup_time = 0.0;
    bool truncation_warning = false; // top-band mass exceeded 1e-6 of total
    bool smallness_warning = false;  // initial datum outside the smallness regime
    double max_top_band_mass = 0.0;

    const DensityField& final_state() const { return snapshots.back(); }
};

// Positivity-safe step bounds.
double imex_dt_bound(const GeneratorOperator& op, double cfl_safety);
double explicit_dt_bound(const GeneratorOperator& op, double cfl_safety);

// One step of the frozen-coefficient equation. Explicit: forward Euler on
// the full generator. Imex: forward Euler on transport+reset, backward Euler
// on the y drift-diffusion. Throws when dt violates the scheme's bound.
DensityField step(const GeneratorOperator& op, const DensityField& F, double dt, Scheme scheme);

// Frozen firing rate over the whole run.
Trajectory run_linear(const Grid& g, const ModelParams& p, double N_const,
                      const DensityField& F0, const EvolveConfig& cfg);

// Nonautonomous input trace: N_steps[k] drives step k (t in [k dt,(k+1) dt)).
// Must supply at least ceil(t_end/dt) values; extra entries are ignored.
Trajectory run_linear(const Grid& g, const ModelParams& p, const std::vector<double>& N_steps,
                      const DensityField& F0, const EvolveConfig& cfg);

// Self-consistent run: the rate is re-evaluated from the current state at
// every step (explicit lagging) and the conductance coefficients updated.
Trajectory run_nonlinear(const Grid& g, const ModelParams& p, const DensityField& F0,
                         const EvolveConfig& cfg);

struct PicardResult {
    FiringTrace trace;
    Trajectory trajectory;
    int iterations = 0;
    bool converged = false;
    double last_update = 0.0; // sup-norm change of the final iteration
};

// Fixed-point iteration on the firing-rate trajectory: solve the linear
// nonautonomous problem driven by the current trace, emit the solution's
// trace, repeat until the trace is stationary in sup norm.
PicardResult picard_iterate(const Grid& g, const ModelParams& p, const DensityField& F0,
                            const EvolveConfig& cfg);

} // namespace vck
