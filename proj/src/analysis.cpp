#include "vck/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace vck {

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    int n = 0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.n = static_cast<int>(x.size());
    if (f.n < 2) return f;
    double sx = 0, sy = 0;
    for (int i = 0; i < f.n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / f.n, my = sy / f.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

} // namespace

std::vector<double> tabulate_weight(const Grid& g, const ModelParams& p, const WeightSpec& w,
                                    double p_exponent) {
    std::vector<double> tab(static_cast<size_t>(g.size()), 1.0);
    if (w.kind == WeightKind::none && !w.twist) return tab;
    for (int j = 0; j < g.n_y; ++j)
        for (int i = 0; i < g.n_v; ++i)
            tab[g.idx(i, j)] = eval_weight(w, p, g.vc[i], g.yc[j], p_exponent);
    return tab;
}

NormReport weighted_norm(const Grid& g, const ModelParams& p, const DensityField& f,
                         double p_exp, const WeightSpec& w) {
    if (!(p_exp >= 1.0)) throw std::invalid_argument("weighted_norm: requires p >= 1");
    if (w.kind != WeightKind::none && !w.admissible())
        throw std::invalid_argument("weighted_norm: weight not admissible");
    NormReport rep;
    rep.p = p_exp;
    rep.weight = w;
    const std::vector<double> tab = tabulate_weight(g, p, w, p_exp);
    if (std::isinf(p_exp)) {
        double r = 0.0;
        for (int q = 0; q < g.size(); ++q)
            r = std::max(r, std::abs(f.values[q]) * tab[q]);
        rep.value = r;
        return rep;
    }
    double s = 0.0;
    for (int q = 0; q < g.size(); ++q)
        s += std::pow(std::abs(f.values[q]) * tab[q], p_exp);
    rep.value = std::pow(s * g.cell_measure(), 1.0 / p_exp);
    return rep;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& norms) {
    if (t.size() != norms.size())
        throw std::invalid_argument("fit_decay_rate: mismatched sample arrays");
    DecayFit out;
    const size_t n = t.size();
    if (n == 0) { out.underflow = true; return out; }

    const double floor = 100.0 * std::numeric_limits<double>::epsilon() *
                         std::max(norms.front(), 1e-300);
    const size_t start = n - std::max<size_t>(2, static_cast<size_t>(0.6 * n));
    std::vector<double> xs, ys;
    for (size_t i = start; i < n; ++i) {
        if (norms[i] > floor) {
            xs.push_back(t[i]);
            ys.push_back(std::log(norms[i]));
        }
    }
    out.usable = static_cast<int>(xs.size());
    if (out.usable < 5) { out.underflow = true; return out; }
    LineFit f = ols(xs, ys);
    out.lambda_hat = f.slope;
    out.C_hat = std::exp(f.intercept);
    out.r2 = f.r2;
    return out;
}

DecayFit fit_decay_rate(const Grid& g, const ModelParams& p, const Trajectory& traj,
                        const DensityField& reference, double p_exp, const WeightSpec& w) {
    if (traj.snapshots.size() < 10)
        throw std::invalid_argument("fit_decay_rate: needs a trajectory of >= 10 snapshots");
    std::vector<double> norms;
    norms.reserve(traj.snapshots.size());
    DensityField diff = reference;
    for (const DensityField& s : traj.snapshots) {
        for (int q = 0; q < g.size(); ++q) diff.values[q] = s.values[q] - reference.values[q];
        norms.push_back(weighted_norm(g, p, diff, p_exp, w).value);
    }
    return fit_decay_rate(traj.times, norms);
}

SmoothingCurve smoothing_curve(const Grid& g, const ModelParams& p, int i0, int j0,
                               const std::vector<double>& times, const WeightSpec& w,
                               const EvolveConfig& cfg) {
    if (w.kind != WeightKind::exponential || w.twist)
        throw std::invalid_argument("smoothing_curve: requires a plain exponential weight");
    if (times.empty()) throw std::invalid_argument("smoothing_curve: empty time table");

    SmoothingCurve out;
    out.ceiling = 1.0 / g.cell_measure();

    DensityField F = zero_field(g);
    F.values[g.idx(i0, j0)] = out.ceiling; // unit mass in one cell

    const std::vector<double> tab = tabulate_weight(g, p, w, 1.0);
    const double l1w0 = std::abs(F.values[g.idx(i0, j0)]) * tab[g.idx(i0, j0)] * g.cell_measure();

    GeneratorOperator op = assemble_generator(g, p, 0.0);
    const double dt = cfg.dt > 0.0 ? cfg.dt : imex_dt_bound(op, cfg.cfl_safety);
    {
        // march and sample at the first step past each requested time
        ImplicitDiffusion iw = prepare_implicit_diffusion(op, dt);
        std::vector<double> scratch(g.size());
        double t = 0.0;
        size_t next = 0;
        // t = 0+ sample uses the initial field itself
        while (next < times.size() && times[next] <= 0.0) {
            out.t.push_back(0.0);
            double sup = 0.0;
            for (int q = 0; q < g.size(); ++q)
                sup = std::max(sup, std::abs(F.values[q]) * tab[q]);
            out.ratio.push_back(sup / l1w0);
            ++next;
        }
        const double t_max = times.back();
        while (t < t_max - 1e-12 && next < times.size()) {
            op.apply_transport(F.values.data(), scratch.data());
            for (int q = 0; q < g.size(); ++q)
                scratch[q] = F.values[q] + dt * scratch[q];
            solve_implicit_diffusion(g, iw, scratch.data(), F.values.data());
            t += dt;
            while (next < times.size() && t >= times[next] - 1e-12) {
                double sup = 0.0;
                for (int q = 0; q < g.size(); ++q)
                    sup = std::max(sup, std::abs(F.values[q]) * tab[q]);
                out.t.push_back(t);
                out.ratio.push_back(sup / l1w0);
                ++next;
            }
        }
    }

    // fit window: clear of the resolution ceiling and of the final plateau
    const double plateau = out.ratio.back();
    std::vector<double> lx, ly;
    for (size_t i = 0; i < out.t.size(); ++i) {
        if (out.t[i] <= 0.0) continue;
        if (out.ratio[i] > 0.5 * out.ceiling) continue;
        if (out.ratio[i] < 2.0 * plateau) continue;
        lx.push_back(std::log(out.t[i]));
        ly.push_back(std::log(out.ratio[i]));
    }
    if (lx.size() >= 5) {
        LineFit f = ols(lx, ly);
        out.nu_hat = -f.slope;
        out.r2 = f.r2;
        out.fit_ok = true;
    }
    return out;
}

std::vector<int> region_cells(const Grid& g, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("region_cells: requires eps in (0,1)");
    std::vector<int> cells;
    for (int j = 0; j < g.n_y; ++j) {
        if (!(g.yc[j] + 0.5 * g.dy < 1.0 / eps)) continue;
        for (int i = 0; i < g.n_v; ++i) {
            const double lo = g.vc[i] - 0.5 * g.dv;
            const double hi = g.vc[i] + 0.5 * g.dv;
            if (lo > eps && g.v_F - hi > eps) cells.push_back(g.idx(i, j));
        }
    }
    return cells;
}

HarnackReport harnack_ratio(const Grid& g, const DensityField& F_T0, const DensityField& F_T,
                            double eps) {
    const std::vector<int> cells = region_cells(g, eps);
    if (cells.empty()) throw std::invalid_argument("harnack_ratio: O_eps contains no whole cell");
    HarnackReport rep;
    rep.sup_T0 = 0.0;
    rep.inf_T = std::numeric_limits<double>::infinity();
    for (int c : cells) {
        rep.sup_T0 = std::max(rep.sup_T0, F_T0.values[c]);
        rep.inf_T = std::min(rep.inf_T, F_T.values[c]);
        if (F_T.values[c] <= 0.0) rep.zero_cells.push_back(c);
    }
    if (rep.inf_T <= 0.0) {
        rep.infinite = true;
        rep.ratio = std::numeric_limits<double>::infinity();
    } else {
        rep.ratio = rep.sup_T0 / rep.inf_T;
    }
    return rep;
}

HarnackReport harnack_ratio(const Grid& g, const Trajectory& traj, double eps, double T0,
                            double T) {
    if (!(T > T0) || !(T0 >= 0.0))
        throw std::invalid_argument("harnack_ratio: requires T > T0 >= 0");
    auto nearest = [&](double target) -> const DensityField& {
        size_t best = 0;
        double gap = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < traj.times.size(); ++i) {
            const double d = std::abs(traj.times[i] - target);
            if (d < gap) { gap = d; best = i; }
        }
        return traj.snapshots[best];
    };
    return harnack_ratio(g, nearest(T0), nearest(T), eps);
}

GrowthBoundReport growth_bound_certificate(const Grid& g, const ModelParams& p,
                                           const WeightSpec& w, int trials, uint64_t seed,
                                           const EvolveConfig& cfg) {
    if (!w.twist) throw std::invalid_argument("growth_bound_certificate: requires the twisted weight");
    GrowthBoundReport rep;

    const std::vector<double> tab1 = tabulate_weight(g, p, w, 1.0);
    const std::vector<double> tab2 = tabulate_weight(g, p, w, 2.0);
    const std::vector<double> tabi =
        tabulate_weight(g, p, w, std::numeric_limits<double>::infinity());

    auto norms3 = [&](const DensityField& f, double out[3]) {
        double s1 = 0.0, s2 = 0.0, si = 0.0;
        for (int q = 0; q < g.size(); ++q) {
            const double a = std::abs(f.values[q]);
            s1 += a * tab1[q];
            s2 += a * tab2[q] * a * tab2[q];
            si = std::max(si, a * tabi[q]);
        }
        out[0] = s1 * g.cell_measure();
        out[1] = std::sqrt(s2 * g.cell_measure());
        out[2] = si;
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double kp[3] = {-std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};

    EvolveConfig run_cfg = cfg;
    run_cfg.snapshot_stride = 0;
    for (int trial = 0; trial < trials; ++trial) {
        DensityField f0 = zero_field(g);
        for (auto& v : f0.values) v = u(rng);
        normalize_mass(g, f0);
        double base[3];
        norms3(f0, base);

        // sample along the run at a handful of times
        const int n_checks = 6;
        DensityField f = f0;
        for (int chunk = 1; chunk <= n_checks; ++chunk) {
            EvolveConfig cc = run_cfg;
            cc.t_end = cfg.t_end / n_checks;
            Trajectory tr = run_linear(g, p, 0.0, f, cc);
            f = tr.final_state();
            const double t = cfg.t_end * chunk / n_checks;
            double cur[3];
            norms3(f, cur);
            for (int q = 0; q < 3; ++q)
                if (base[q] > 0.0 && cur[q] > 0.0)
                    kp[q] = std::max(kp[q], std::log(cur[q] / base[q]) / t);
        }
    }
    rep.kappa_p1 = kp[0];
    rep.kappa_p2 = kp[1];
    rep.kappa_pinf = kp[2];
    rep.kappa_hat = std::max(kp[0], std::max(kp[1], kp[2]));
    rep.finite = std::isfinite(rep.kappa_hat);
    return rep;
}

double spectral_gap_dense(const GeneratorOperator& op) {
    const int n = op.grid.size();
    if (n > 1000)
        throw std::invalid_argument("spectral_gap_dense: oracle restricted to small grids");
    Eigen::MatrixXd A(op.L);
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    const auto& ev = es.eigenvalues();
    double first = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < ev.size(); ++i) {
        const double re = ev[i].real();
        if (re > first) {
            second = first;
            first = re;
        } else if (re > second) {
            second = re;
        }
    }
    return second;
}

} // namespace vck
