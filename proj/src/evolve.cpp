#include "vck/evolve.hpp"

#include <cmath>
#include <stdexcept>

namespace vck {

namespace {

double linf(const std::vector<double>& v) {
    double r = 0.0;
    for (double x : v) r = std::max(r, std::abs(x));
    return r;
}

int resolve_steps(double t_end, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve: requires dt > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("evolve: requires t_end > 0");
    return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
}

double resolve_dt(const GeneratorOperator& op, const EvolveConfig& cfg) {
    if (cfg.dt > 0.0) return cfg.dt;
    return cfg.cfl_safety * op.grid.dv / op.max_abs_J;
}

// Max |diagonal| of the y-operator for given flux coefficients.
double diffusion_diag_bound(const Grid& g, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
    double r = 0.0;
    for (int j = 0; j < g.n_y; ++j) {
        const double out_up = j + 1 < g.n_y ? lo[j] : 0.0;
        const double out_dn = j > 0 ? hi[j - 1] : 0.0;
        r = std::max(r, (out_up + out_dn) / g.dy);
    }
    return r;
}

// Shared state for a run: the transport data is frozen (independent of the
// firing rate), the y-coefficients refresh whenever N changes.
struct Stepper {
    const GeneratorOperator& op;
    Scheme scheme;
    double dt;
    std::vector<double> lo, hi;
    ImplicitDiffusion iw;
    double current_N = -1.0;
    bool band_violation = false;
    std::vector<double> scratch;

    Stepper(const GeneratorOperator& base, Scheme s, double step_dt)
        : op(base), scheme(s), dt(step_dt), scratch(base.grid.size()) {
        set_rate(base.N_frozen, true);
        if (scheme == Scheme::imex) {
            if (dt * op.max_abs_diag_T > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "evolve: imex time step violates the transport bound dv/max|J|");
        }
    }

    void set_rate(double N, bool force = false) {
        if (!force && N == current_N) return;
        const Coefficients co = eval_coeffs(op.params, N);
        band_violation = band_violation || co.band_violation;
        compute_diffusion_coeffs(op.grid, co, lo, hi);
        if (scheme == Scheme::imex) {
            iw = prepare_implicit_diffusion(op.grid, lo, hi, dt);
        } else {
            const double bound = op.max_abs_diag_T + diffusion_diag_bound(op.grid, lo, hi);
            if (dt * bound > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "evolve: explicit time step violates the stability bound 1/max|diag|");
        }
        current_N = N;
    }

    void advance(DensityField& F) {
        double* f = F.values.data();
        double* tmp = scratch.data();
        op.apply_transport(f, tmp);
        if (scheme == Scheme::explicit_euler) {
            apply_diffusion_add(op.grid, lo, hi, f, tmp);
            const int n = op.grid.size();
#pragma omp parallel for schedule(static)
            for (int q = 0; q < n; ++q) f[q] += dt * tmp[q];
        } else {
            const int n = op.grid.size();
#pragma omp parallel for schedule(static)
            for (int q = 0; q < n; ++q) tmp[q] = f[q] + dt * tmp[q];
            solve_implicit_diffusion(op.grid, iw, tmp, f);
        }
    }
};

enum class RateMode { constant, trace, self_consistent };

Trajectory run_impl(const Grid& g, const ModelParams& p, RateMode mode, double N_const,
                    const std::vector<double>* N_steps, const DensityField& F0,
                    const EvolveConfig& cfg) {
    p.validate();
    const double N0 = mode == RateMode::constant ? N_const
                    : mode == RateMode::trace    ? (N_steps->empty() ? 0.0 : (*N_steps)[0])
                                                 : firing_rate(g, p, F0);
    GeneratorOperator op = assemble_generator(g, p, N0);
    const double dt = resolve_dt(op, cfg);
    if (cfg.scheme == Scheme::imex && dt > cfg.cfl_safety * g.dv / op.max_abs_J * (1.0 + 1e-12))
        throw std::invalid_argument("evolve: dt exceeds cfl_safety * dv / max|J|");
    const int n_steps = resolve_steps(cfg.t_end, dt);
    if (mode == RateMode::trace && static_cast<int>(N_steps->size()) < n_steps)
        throw std::invalid_argument("evolve: input firing trace shorter than the run");

    const double N_cap = p.N_star();

    // weight table for the Linf_w diagnostic
    std::vector<double> wtab(g.size(), 1.0);
    const bool weighted = cfg.diag_weight.kind != WeightKind::none;
    if (weighted) {
        const double pexp = std::numeric_limits<double>::infinity();
        for (int j = 0; j < g.n_y; ++j)
            for (int i = 0; i < g.n_v; ++i)
                wtab[g.idx(i, j)] = eval_weight(cfg.diag_weight, p, g.vc[i], g.yc[j], pexp);
    }

    Trajectory out;
    out.dt = dt;
    Stepper stepper(op, cfg.scheme, dt);

    DensityField F = F0;
    F.time = 0.0;
    const double F0_linf = linf(F0.values);
    const double total_mass0 = mass(g, F);

    // smallness diagnostic for the nonlinear regime
    if (mode == RateMode::self_consistent && p.c > 0.0) {
        double eta = cfg.eta_smallness;
        if (std::isnan(eta)) {
            double C3 = 0.0;
            for (int j = g.j_F; j < g.n_y; ++j) {
                const double w = weighted ? eval_plain_weight(cfg.diag_weight, g.yc[j]) : 1.0;
                C3 += eval_J(p, g.v_F, g.yc[j]) / w * g.dy;
            }
            eta = C3 > 0.0 ? p.effective_a_ceiling() / (2.0 * C3)
                           : std::numeric_limits<double>::infinity();
        }
        double linfw = 0.0;
        for (int q = 0; q < g.size(); ++q)
            linfw = std::max(linfw, std::abs(F.values[q]) * wtab[q]);
        out.smallness_warning = (p.c + p.c * p.c) * linfw > eta;
    }

    auto record = [&](int k) {
        out.trace.t.push_back(k * dt);
        out.trace.N.push_back(firing_rate(g, p, F));
        out.mass_t.push_back(mass(g, F));
        double lw = 0.0;
        for (int q = 0; q < g.size(); ++q)
            lw = std::max(lw, std::abs(F.values[q]) * wtab[q]);
        out.linf_w_t.push_back(lw);
        const double band = total_mass0 != 0.0 ? top_band_mass(g, F) / std::abs(total_mass0) : 0.0;
        out.max_top_band_mass = std::max(out.max_top_band_mass, band);
    };
    auto snapshot = [&](int k) {
        out.times.push_back(k * dt);
        out.snapshots.push_back(F);
    };

    record(0);
    snapshot(0);
    for (int k = 0; k < n_steps; ++k) {
        double N_in = 0.0;
        switch (mode) {
            case RateMode::constant: N_in = N_const; break;
            case RateMode::trace: N_in = (*N_steps)[k]; break;
            case RateMode::self_consistent: N_in = out.trace.N.back(); break;
        }
        if (N_in > N_cap) stepper.band_violation = true;
        stepper.set_rate(N_in);
        out.trace.injected_mass.push_back(dt * out.trace.N.back());
        stepper.advance(F);
        F.time = (k + 1) * dt;
        record(k + 1);
        if (cfg.snapshot_stride > 0 && (k + 1) % cfg.snapshot_stride == 0 && k + 1 < n_steps)
            snapshot(k + 1);
        if (linf(F.values) > cfg.blowup_factor * std::max(F0_linf, 1e-300)) {
            out.blew_up = true;
            out.blowup_time = F.time;
            break;
        }
    }
    snapshot(static_cast<int>(out.trace.t.size()) - 1);
    out.truncation_warning = out.max_top_band_mass > 1e-6;
    return out;
}

} // namespace

double imex_dt_bound(const GeneratorOperator& op, double cfl_safety) {
    return cfl_safety * op.grid.dv / op.max_abs_J;
}

double explicit_dt_bound(const GeneratorOperator& op, double cfl_safety) {
    const double dT = op.max_abs_diag_T > 0.0 ? 1.0 / op.max_abs_diag_T
                                              : std::numeric_limits<double>::infinity();
    const double dD = op.max_abs_diag_D > 0.0 ? 1.0 / op.max_abs_diag_D
                                              : std::numeric_limits<double>::infinity();
    return cfl_safety / (1.0 / dT + 1.0 / dD);
}

DensityField step(const GeneratorOperator& op, const DensityField& F, double dt, Scheme scheme) {
    if (scheme == Scheme::explicit_euler && dt * op.max_abs_diag_L > 1.0 + 1e-12)
        throw std::invalid_argument("step: explicit time step violates 1/max|diag L|");
    Stepper stepper(op, scheme, dt);
    DensityField out = F;
    stepper.advance(out);
    out.time = F.time + dt;
    return out;
}

Trajectory run_linear(const Grid& g, const ModelParams& p, double N_const,
                      const DensityField& F0, const EvolveConfig& cfg) {
    if (!(N_const >= 0.0)) throw std::invalid_argument("run_linear: requires N >= 0");
    return run_impl(g, p, RateMode::constant, N_const, nullptr, F0, cfg);
}

Trajectory run_linear(const Grid& g, const ModelParams& p, const std::vector<double>& N_steps,
                      const DensityField& F0, const EvolveConfig& cfg) {
    for (double N : N_steps)
        if (!(N >= 0.0)) throw std::invalid_argument("run_linear: requires N >= 0");
    return run_impl(g, p, RateMode::trace, 0.0, &N_steps, F0, cfg);
}

Trajectory run_nonlinear(const Grid& g, const ModelParams& p, const DensityField& F0,
                         const EvolveConfig& cfg) {
    return run_impl(g, p, RateMode::self_consistent, 0.0, nullptr, F0, cfg);
}

PicardResult picard_iterate(const Grid& g, const ModelParams& p, const DensityField& F0,
                            const EvolveConfig& cfg) {
    PicardResult res;
    if (p.c == 0.0) {
        // no coupling: the map is constant, a single evaluation is the fixed point
        res.trajectory = run_linear(g, p, 0.0, F0, cfg);
        res.trace = res.trajectory.trace;
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    GeneratorOperator op0 = assemble_generator(g, p, 0.0);
    const double dt = resolve_dt(op0, cfg);
    const int n_steps = resolve_steps(cfg.t_end, dt);

    std::vector<double> N_cur(n_steps + 1, firing_rate(g, p, F0));
    for (int m = 1; m <= cfg.picard.max_iters; ++m) {
        std::vector<double> input(N_cur.begin(), N_cur.begin() + n_steps);
        Trajectory traj = run_linear(g, p, input, F0, cfg);
        const std::vector<double>& N_next = traj.trace.N;
        double delta = 0.0;
        for (size_t k = 0; k < N_next.size() && k < N_cur.size(); ++k)
            delta = std::max(delta, std::abs(N_next[k] - N_cur[k]));
        N_cur.assign(N_next.begin(), N_next.end());
        N_cur.resize(n_steps + 1, N_next.back());
        res.trajectory = std::move(traj);
        res.iterations = m;
        res.last_update = delta;
        if (delta < cfg.picard.tol) {
            res.converged = true;
            break;
        }
    }
    res.trace = res.trajectory.trace;
    return res;
}

} // namespace vck
