#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "vck/evolve.hpp"
#include "vck/stationary.hpp"

using namespace vck;

namespace {

ModelParams desk_params(double c = 0.0) {
    ModelParams p;
    p.v_F = 1.0; p.v_E = 2.0; p.y_L = 1.0;
    p.a_star = 1.0; p.y_star = 1.0; p.c = c;
    return p;
}

DensityField random_nonneg(const Grid& g, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DensityField f = zero_field(g);
    for (auto& v : f.values) v = u(rng);
    normalize_mass(g, f);
    return f;
}

double linf_diff(const DensityField& a, const DensityField& b) {
    double r = 0.0;
    for (size_t q = 0; q < a.values.size(); ++q)
        r = std::max(r, std::abs(a.values[q] - b.values[q]));
    return r;
}

} // namespace

TEST_CASE("step conserves mass and positivity under the bounds") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    GeneratorOperator op = assemble_generator(g, p, 0.0);

    for (Scheme s : {Scheme::imex, Scheme::explicit_euler}) {
        const double dt = s == Scheme::imex ? imex_dt_bound(op, 0.5)
                                            : explicit_dt_bound(op, 0.9);
        for (uint64_t seed = 0; seed < 5; ++seed) {
            DensityField f = random_nonneg(g, 40 + seed);
            DensityField f1 = step(op, f, dt, s);
            CHECK(std::abs(mass(g, f1) - mass(g, f)) <= 1e-12 * std::abs(mass(g, f)));
            double mn = 0.0;
            for (double v : f1.values) mn = std::min(mn, v);
            CHECK(mn >= 0.0);
        }
    }
}

TEST_CASE("step refuses an oversized explicit time step") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    DensityField f = random_nonneg(g, 3);
    const double dt_bad = 2.0 / op.max_abs_diag_L;
    CHECK_THROWS_AS(step(op, f, dt_bad, Scheme::explicit_euler), std::invalid_argument);
    const double dt_bad_imex = 2.0 / op.max_abs_diag_T;
    CHECK_THROWS_AS(step(op, f, dt_bad_imex, Scheme::imex), std::invalid_argument);
}

TEST_CASE("stationary state is a fixed point of step") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    StationaryResult st = solve_stationary(g, p, 0.0);
    REQUIRE(st.ok);
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    const double dt = imex_dt_bound(op, 0.5);
    for (Scheme s : {Scheme::imex, Scheme::explicit_euler}) {
        const double dts = s == Scheme::imex ? dt : explicit_dt_bound(op, 0.9);
        DensityField f1 = step(op, st.M, dts, s);
        double sup = 0.0;
        for (double v : st.M.values) sup = std::max(sup, std::abs(v));
        CHECK(linf_diff(f1, st.M) < 1e-10 * sup);
    }
}

TEST_CASE("linear run from the stationary state stays put") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    StationaryResult st = solve_stationary(g, p, 0.0);
    REQUIRE(st.ok);
    EvolveConfig cfg;
    cfg.t_end = 1.0;
    Trajectory tr = run_linear(g, p, 0.0, st.M, cfg);
    CHECK(linf_diff(tr.final_state(), st.M) < 1e-9);
}

TEST_CASE("mass drift stays at round-off over a thousand steps") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    EvolveConfig cfg;
    cfg.dt = imex_dt_bound(op, 0.5);
    cfg.t_end = 1000.0 * cfg.dt;
    Trajectory tr = run_linear(g, p, 0.0, random_nonneg(g, 11), cfg);
    const double m0 = tr.mass_t.front();
    for (double m : tr.mass_t)
        CHECK(std::abs(m - m0) <= 1e-9 * std::abs(m0));
}

TEST_CASE("nonlinear run with c = 0 matches the linear run bitwise") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    EvolveConfig cfg;
    cfg.t_end = 0.5;
    DensityField f0 = random_nonneg(g, 21);
    Trajectory a = run_nonlinear(g, p, f0, cfg);
    Trajectory b = run_linear(g, p, 0.0, f0, cfg);
    CHECK(linf_diff(a.final_state(), b.final_state()) == 0.0);
    for (size_t k = 0; k < a.trace.N.size(); ++k)
        CHECK(a.trace.N[k] == b.trace.N[k]);
}

TEST_CASE("linear run with c = 0 ignores the input trace") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    EvolveConfig cfg;
    cfg.t_end = 0.25;
    DensityField f0 = random_nonneg(g, 22);
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    const double dt = imex_dt_bound(op, 0.5);
    const int n_steps = static_cast<int>(std::ceil(cfg.t_end / dt - 1e-9));
    std::vector<double> wild(n_steps);
    for (int k = 0; k < n_steps; ++k) wild[k] = 3.0 + std::sin(0.1 * k);
    Trajectory a = run_linear(g, p, wild, f0, cfg);
    Trajectory b = run_linear(g, p, 0.0, f0, cfg);
    for (size_t k = 0; k < a.trace.N.size(); ++k)
        CHECK(a.trace.N[k] == b.trace.N[k]);
}

TEST_CASE("semigroup property for the frozen linear flow") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    GeneratorOperator op = assemble_generator(g, p, 0.5);
    EvolveConfig cfg;
    cfg.dt = imex_dt_bound(op, 0.5);
    DensityField f0 = random_nonneg(g, 33);

    cfg.t_end = 100 * cfg.dt;
    Trajectory first = run_linear(g, p, 0.5, f0, cfg);
    cfg.t_end = 60 * cfg.dt;
    Trajectory second = run_linear(g, p, 0.5, first.final_state(), cfg);
    cfg.t_end = 160 * cfg.dt;
    Trajectory full = run_linear(g, p, 0.5, f0, cfg);
    CHECK(linf_diff(second.final_state(), full.final_state()) <= 10.0 * 160.0 * 1e-12);
}

TEST_CASE("injected reset mass equals extracted mass") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    EvolveConfig cfg;
    cfg.t_end = 0.5;
    Trajectory tr = run_nonlinear(g, p, random_nonneg(g, 5), cfg);
    for (size_t k = 0; k < tr.trace.injected_mass.size(); ++k)
        CHECK(tr.trace.injected_mass[k] == tr.dt * tr.trace.N[k]);
    for (double n : tr.trace.N) CHECK(n >= 0.0);
}

TEST_CASE("long nonlinear run approaches the stationary firing rate") {
    ModelParams p = desk_params(0.05);
    Grid g = build_grid(p, 16, 32, 8.0);
    FixedPointResult fp = fixed_point_steady(g, p);
    REQUIRE(fp.converged);
    EvolveConfig cfg;
    cfg.t_end = 30.0;
    Trajectory tr = run_nonlinear(g, p, fp.M, cfg);
    CHECK(std::abs(tr.trace.N.back() - fp.N_sharp) < 1e-6);
    CHECK_FALSE(tr.blew_up);
}

TEST_CASE("picard: c = 0 converges in one iteration") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    EvolveConfig cfg;
    cfg.t_end = 0.5;
    PicardResult pr = picard_iterate(g, p, random_nonneg(g, 9), cfg);
    CHECK(pr.converged);
    CHECK(pr.iterations == 1);
}

TEST_CASE("picard agrees with the lagged nonlinear run to O(dt)") {
    ModelParams p = desk_params(0.1);
    Grid g = build_grid(p, 12, 24, 8.0);
    DensityField f0 = random_nonneg(g, 13);

    auto gap_for = [&](double dt_scale) {
        GeneratorOperator op = assemble_generator(g, p, 0.0);
        EvolveConfig cfg;
        cfg.dt = imex_dt_bound(op, 0.5) * dt_scale;
        cfg.t_end = 1.0;
        cfg.picard.tol = 1e-12;
        PicardResult pr = picard_iterate(g, p, f0, cfg);
        Trajectory nl = run_nonlinear(g, p, f0, cfg);
        double gap = 0.0;
        for (size_t k = 0; k < pr.trace.N.size() && k < nl.trace.N.size(); ++k)
            gap = std::max(gap, std::abs(pr.trace.N[k] - nl.trace.N[k]));
        return std::make_pair(gap, cfg.dt);
    };
    // The lagged coupling is itself a fixed point of the discrete Picard
    // map, so the traces agree to iteration tolerance, well inside O(dt).
    auto [gap1, dt1] = gap_for(1.0);
    auto [gap2, dt2] = gap_for(0.5);
    CHECK(gap1 <= 50.0 * dt1);
    CHECK(gap2 <= 50.0 * dt2);
}

TEST_CASE("picard iteration count trends down with c") {
    ModelParams base = desk_params();
    Grid g = build_grid(base, 12, 24, 8.0);
    DensityField f0 = random_nonneg(g, 17);
    EvolveConfig cfg;
    cfg.t_end = 1.0;
    cfg.picard.tol = 1e-9;
    int prev = 1 << 20;
    bool monotone = true;
    for (double c : {0.2, 0.1, 0.05}) {
        PicardResult pr = picard_iterate(g, desk_params(c), f0, cfg);
        CHECK(pr.converged);
        if (pr.iterations > prev) monotone = false;
        prev = pr.iterations;
    }
    CHECK(monotone);
}
