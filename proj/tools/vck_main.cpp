// Batch driver: parses a key = value config, dispatches one subcommand and
// emits CSV tables, plot data, certificates and a manifest into out_dir.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "vck/analysis.hpp"
#include "vck/config.hpp"
#include "vck/harris.hpp"
#include "vck/io.hpp"
#include "vck/particle.hpp"
#include "vck/stationary.hpp"

using namespace vck;

namespace {

struct RunContext {
    RunConfig cfg;
    std::string dir;
    std::vector<std::string> files;
    std::vector<std::string> log_lines;

    void note(const std::string& s) { log_lines.push_back(s); }
    std::string path(const std::string& name) {
        files.push_back(name);
        return dir + "/" + name;
    }
    void finish() {
        std::ofstream log(dir + "/run.log");
        for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
        for (const auto& s : log_lines) log << s << '\n';
        files.push_back("run.log");
        write_manifest(dir, serialize_config(cfg), cfg.seed, files);
    }
};

// deterministic default initial datum: flat in v, Gaussian bump in y
DensityField default_initial(const Grid& g, const ModelParams& p) {
    DensityField f = zero_field(g);
    for (int j = 0; j < g.n_y; ++j) {
        const double z = (g.yc[j] - p.y_star);
        for (int i = 0; i < g.n_v; ++i)
            f.values[g.idx(i, j)] = std::exp(-0.5 * z * z / p.a_star);
    }
    normalize_mass(g, f);
    return f;
}

void emit_trace(RunContext& ctx, const Trajectory& tr, const std::string& stem) {
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < tr.trace.t.size(); ++k)
        rows.push_back({tr.trace.t[k], tr.mass_t[k], tr.trace.N[k], tr.linf_w_t[k]});
    write_csv(ctx.path(stem + ".csv"), "t,mass,firing_rate,Linf_w", rows);
    write_plotdata(ctx.path(stem + ".plot"), tr.trace.t, tr.trace.N);
}

int cmd_evolve(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    DensityField f0 = default_initial(g, p);
    Trajectory tr = run_nonlinear(g, p, f0, ctx.cfg.evolve_config());
    emit_trace(ctx, tr, "trace");
    write_field_csv(ctx.path("final_state.csv"), g, tr.final_state());
    if (tr.smallness_warning) ctx.note("warning: initial datum outside the smallness regime");
    if (tr.truncation_warning)
        ctx.note("warning: top-band mass exceeded 1e-6 (max " +
                 format_g17(tr.max_top_band_mass) + ")");
    if (tr.blew_up) {
        ctx.note("error: blow-up at t = " + format_g17(tr.blowup_time));
        return 4;
    }
    ctx.note("final mass drift = " + format_g17(std::abs(tr.mass_t.back() - tr.mass_t.front())));
    return 0;
}

int cmd_steady(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    FixedPointResult fp = fixed_point_steady(g, p);
    write_field_csv(ctx.path("steady_state.csv"), g, fp.M);
    std::vector<std::vector<double>> rows;
    for (const auto& r : fp.log) rows.push_back({r[0], r[1], r[2]});
    write_csv(ctx.path("fixedpoint_log.csv"), "iter,N,residual", rows);
    ctx.note("N_sharp = " + format_g17(fp.N_sharp));
    ctx.note("iterations = " + std::to_string(fp.iterations));
    ctx.note("pde_residual_inf = " + format_g17(fp.residual_pde_inf));
    if (fp.weak_connectivity_warning) ctx.note("warning: c at or above v_F/v_E");
    if (!fp.converged) {
        ctx.note("error: fixed point not converged");
        return 4;
    }
    return 0;
}

int cmd_stability(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    FixedPointResult fp = fixed_point_steady(g, p);
    if (!fp.converged) {
        ctx.note("error: fixed point not converged");
        return 4;
    }
    std::mt19937_64 rng(ctx.cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DensityField pert = zero_field(g);
    for (auto& v : pert.values) v = u(rng);
    normalize_mass(g, pert);
    DensityField f0 = fp.M;
    for (int q = 0; q < g.size(); ++q)
        f0.values[q] += 0.1 * (pert.values[q] - fp.M.values[q]); // zero-mean perturbation

    EvolveConfig ecfg = ctx.cfg.evolve_config();
    ecfg.snapshot_stride = 25;
    Trajectory tr = run_linear(g, p, fp.N_sharp, f0, ecfg);

    WeightSpec w = ctx.cfg.weight_spec();
    std::vector<double> norms;
    DensityField diff = fp.M;
    for (const auto& s : tr.snapshots) {
        for (int q = 0; q < g.size(); ++q) diff.values[q] = s.values[q] - fp.M.values[q];
        norms.push_back(weighted_norm(g, p, diff, 2.0, w).value);
    }
    DecayFit fit = fit_decay_rate(tr.times, norms);
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < tr.times.size(); ++k) rows.push_back({tr.times[k], norms[k]});
    write_csv(ctx.path("decay.csv"), "t,norm", rows);
    write_plotdata(ctx.path("decay.plot"), tr.times, norms);
    write_csv(ctx.path("decay_fit.csv"), "lambda_hat,C_hat,r2,usable",
              {{fit.lambda_hat, fit.C_hat, fit.r2, static_cast<double>(fit.usable)}});
    ctx.note("lambda_hat = " + format_g17(fit.lambda_hat));
    ctx.note("r2 = " + format_g17(fit.r2));
    if (fit.underflow) ctx.note("warning: decay fit underflow");
    return 0;
}

int cmd_smoothing(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    WeightSpec w = ctx.cfg.weight_spec();
    if (w.kind != WeightKind::exponential) {
        ctx.note("error: smoothing requires weight_kind = exponential");
        return 2;
    }
    w.twist = false;
    std::vector<double> times{0.0};
    for (double t = 1e-3; t <= ctx.cfg.t_end; t *= 1.25) times.push_back(t);
    SmoothingCurve sc =
        smoothing_curve(g, p, g.n_v / 3, g.j_F + 4, times, w, ctx.cfg.evolve_config());
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < sc.t.size(); ++k) rows.push_back({sc.t[k], sc.ratio[k]});
    write_csv(ctx.path("smoothing.csv"), "t,ratio", rows);
    write_plotdata(ctx.path("smoothing.plot"), sc.t, sc.ratio);
    write_csv(ctx.path("smoothing_fit.csv"), "nu_hat,r2,ceiling",
              {{sc.nu_hat, sc.r2, sc.ceiling}});
    ctx.note("nu_hat = " + format_g17(sc.nu_hat));
    ctx.note("grid ceiling = " + format_g17(sc.ceiling));
    return sc.fit_ok ? 0 : 4;
}

int cmd_harnack(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    DensityField f0 = zero_field(g);
    f0.values[g.idx(g.n_v / 2, std::min(g.n_y - 1, g.j_F + 3))] = 1.0 / g.cell_measure();
    EvolveConfig ecfg = ctx.cfg.evolve_config();
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    const double dt = ecfg.dt > 0.0 ? ecfg.dt : imex_dt_bound(op, ecfg.cfl_safety);
    ecfg.snapshot_stride = std::max(1, static_cast<int>(std::llround(0.25 * ecfg.t_end / dt)));
    Trajectory tr = run_linear(g, p, 0.0, f0, ecfg);
    const double T = ecfg.t_end, T0 = 0.5 * ecfg.t_end;
    const double eps = ctx.cfg.harris_eps_ladder.front();
    HarnackReport hr = harnack_ratio(g, tr, eps, T0, T);
    write_csv(ctx.path("harnack.csv"), "T0,T,eps,sup_T0,inf_T,ratio",
              {{T0, T, eps, hr.sup_T0, hr.inf_T, hr.ratio}});
    ctx.note("harnack ratio = " + format_g17(hr.ratio));
    if (hr.infinite) {
        ctx.note("error: positivity has not spread to all of O_eps");
        for (int c : hr.zero_cells) ctx.note("  zero cell index " + std::to_string(c));
        return 4;
    }
    return 0;
}

int cmd_harris(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    if (g.size() > 1200) {
        ctx.note("error: harris needs a small grid (n_v*n_y <= 1200); got " +
                 std::to_string(g.size()));
        return 2;
    }
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    WeightSpec w = ctx.cfg.weight_spec();
    w.twist = true;
    VckHarrisSetup setup = make_vck_harris_setup(op, ctx.cfg.harris_T, w);
    HarrisCertificate cert = certify(setup.sg, setup.psi_family, ctx.cfg.harris_eps_ladder);
    if (!cert.ok) {
        ctx.note("error: certificate failed: " + cert.binding_constraint);
        return 4;
    }
    {
        std::ofstream f(ctx.path("certificate.txt"));
        f << "T = " << format_g17(cert.T) << '\n'
          << "norm_mode = " << (cert.mode == LatticeNorm::weighted_l1 ? "weighted_l1" : "weighted_sup") << '\n'
          << "gamma_L = " << format_g17(cert.gamma_L) << '\n'
          << "K = " << format_g17(cert.K) << '\n'
          << "A = " << format_g17(cert.A) << '\n'
          << "eps = " << format_g17(cert.eps) << '\n'
          << "eta = " << format_g17(cert.eta) << '\n'
          << "xi_eps = " << format_g17(cert.xi_eps) << '\n'
          << "Xi_eps = " << format_g17(cert.Xi_eps) << '\n'
          << "gamma_H = " << format_g17(cert.gamma_H) << '\n'
          << "beta = " << format_g17(cert.beta) << '\n'
          << "gamma = " << format_g17(cert.gamma) << '\n'
          << "lambda2 = " << format_g17(cert.lambda2) << '\n'
          << "C = " << format_g17(cert.C) << '\n';
    }
    ValidationReport vr = validate_certificate(setup.sg, cert, 100, 50, ctx.cfg.seed);
    std::vector<std::vector<double>> rows;
    for (const auto& r : vr.rows)
        rows.push_back({static_cast<double>(r.trial), static_cast<double>(r.n), r.lhs, r.rhs,
                        r.margin});
    write_csv(ctx.path("harris_validation.csv"), "trial,n,lhs,rhs,margin", rows);
    ctx.note("gamma = " + format_g17(cert.gamma));
    ctx.note("lambda2 = " + format_g17(cert.lambda2));
    ctx.note("validation " + std::string(vr.pass ? "passed" : "FAILED"));
    return vr.pass ? 0 : 4;
}

int cmd_particle(RunContext& ctx) {
    const ModelParams p = ctx.cfg.model_params();
    Grid g = build_grid(p, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    ParticleConfig pc;
    pc.n_neurons = ctx.cfg.n_neurons;
    pc.dt = ctx.cfg.dt > 0.0 ? ctx.cfg.dt : 1e-3;
    pc.t_end = ctx.cfg.t_end;
    pc.seed = ctx.cfg.seed;
    pc.n_workers = 1; // pinned for byte-identical artifacts
    pc.window_t0 = 0.5 * ctx.cfg.t_end;
    pc.window_t1 = ctx.cfg.t_end;
    pc.hist_grid = &g;
    ParticleResult r = simulate_network(p, pc);

    std::vector<std::vector<double>> rows;
    rows.reserve(r.spikes.size());
    for (const SpikeEvent& e : r.spikes)
        rows.push_back({e.t, static_cast<double>(e.neuron)});
    write_csv(ctx.path("spikes.csv"), "time,neuron", rows);
    write_field_csv(ctx.path("particle_density.csv"), g, r.density);
    ctx.note("total spikes = " + std::to_string(r.total_spikes));
    ctx.note("window firing rate = " + format_g17(r.window_rate));
    return 0;
}

int cmd_sweep(RunContext& ctx) {
    const ModelParams base = ctx.cfg.model_params();
    Grid g = build_grid(base, ctx.cfg.n_v, ctx.cfg.n_y, ctx.cfg.y_max);
    std::vector<double> cs;
    for (double f : {1.0, 0.5, 0.25, 0.125}) cs.push_back(ctx.cfg.c * f);
    cs.push_back(0.0);

    const int n_runs = static_cast<int>(cs.size());
    std::vector<FixedPointResult> results(n_runs);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n_runs; ++k) {
        ModelParams p = base;
        p.c = cs[k];
        results[k] = fixed_point_steady(g, p);
    }
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < n_runs; ++k)
        rows.push_back({cs[k], results[k].N_sharp, static_cast<double>(results[k].iterations),
                        results[k].residual_fixed});
    write_csv(ctx.path("sweep_nsharp.csv"), "c,N_sharp,iterations,residual", rows);
    std::vector<double> xs = cs, ys;
    for (const auto& r : results) ys.push_back(r.N_sharp);
    write_plotdata(ctx.path("sweep_nsharp.plot"), xs, ys);
    for (const auto& r : results)
        if (!r.converged) {
            ctx.note("error: sweep member not converged");
            return 4;
        }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"voltage-conductance kinetic solver and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    const std::vector<std::string> names{"evolve",  "steady",  "stability", "smoothing",
                                         "harnack", "harris",  "particle",  "sweep"};
    for (const auto& name : names)
        app.add_subcommand(name)->add_option("-c,--config", config_path, "config file")
            ->required();

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        RunContext ctx;
        ctx.cfg = parse_config(config_path);
        ctx.dir = ctx.cfg.out_dir;
        ensure_dir(ctx.dir);

        int rc = 1;
        if (sub == "evolve") rc = cmd_evolve(ctx);
        else if (sub == "steady") rc = cmd_steady(ctx);
        else if (sub == "stability") rc = cmd_stability(ctx);
        else if (sub == "smoothing") rc = cmd_smoothing(ctx);
        else if (sub == "harnack") rc = cmd_harnack(ctx);
        else if (sub == "harris") rc = cmd_harris(ctx);
        else if (sub == "particle") rc = cmd_particle(ctx);
        else if (sub == "sweep") rc = cmd_sweep(ctx);

        ctx.finish();
        for (const auto& line : ctx.log_lines)
            if (line.rfind("error:", 0) == 0) std::cerr << sub << ": " << line << '\n';
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << sub << ": " << e.what() << '\n';
        return 3;
    }
}
