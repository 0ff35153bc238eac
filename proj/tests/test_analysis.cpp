#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "vck/analysis.hpp"
#include "vck/stationary.hpp"

using namespace vck;

namespace {
ModelParams desk_params() {
    ModelParams p;
    return p; // v_F=1 v_E=2 y_L=1 a*=1 y*=1 c=0
}

DensityField random_field(const Grid& g, uint64_t seed, bool nonneg) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DensityField f = zero_field(g);
    for (auto& v : f.values) v = nonneg ? u(rng) : 2.0 * u(rng) - 1.0;
    return f;
}
} // namespace

TEST_CASE("weighted norm basics") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 4, 4, 8.0);
    WeightSpec none;
    none.kind = WeightKind::none;

    DensityField f = zero_field(g);
    CHECK(weighted_norm(g, p, f, 1.0, none).value == 0.0);

    f.values[g.idx(1, 2)] = 1.0;
    CHECK(weighted_norm(g, p, f, 1.0, none).value ==
          doctest::Approx(g.cell_measure()).epsilon(1e-14));

    // independent naive summation oracle on the 4x4 grid
    DensityField r = random_field(g, 5, false);
    WeightSpec poly;
    poly.kind = WeightKind::polynomial;
    poly.k = 2.0;
    double naive = 0.0;
    for (int j = 0; j < g.n_y; ++j)
        for (int i = 0; i < g.n_v; ++i)
            naive += std::abs(r.values[g.idx(i, j)]) * (1.0 + g.yc[j] * g.yc[j]) * g.dv * g.dy;
    CHECK(weighted_norm(g, p, r, 1.0, poly).value == doctest::Approx(naive).epsilon(1e-13));

    WeightSpec bad;
    bad.kind = WeightKind::polynomial;
    bad.k = 0.5;
    CHECK_THROWS_AS(weighted_norm(g, p, r, 1.0, bad), std::invalid_argument);
}

TEST_CASE("weighted norm: triangle inequality and homogeneity") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 8, 8, 8.0);
    WeightSpec w;
    w.kind = WeightKind::polynomial;
    w.k = 2.0;
    w.twist = true;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int draw = 0; draw < 100; ++draw) {
        DensityField a = zero_field(g), b = zero_field(g), sum = zero_field(g), sc = zero_field(g);
        const double lam = scale(rng);
        for (int q = 0; q < g.size(); ++q) {
            a.values[q] = u(rng);
            b.values[q] = u(rng);
            sum.values[q] = a.values[q] + b.values[q];
            sc.values[q] = lam * a.values[q];
        }
        for (double pe : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
            const double na = weighted_norm(g, p, a, pe, w).value;
            const double nb = weighted_norm(g, p, b, pe, w).value;
            const double ns = weighted_norm(g, p, sum, pe, w).value;
            const double nl = weighted_norm(g, p, sc, pe, w).value;
            CHECK(ns <= na + nb + 1e-12 * (na + nb));
            CHECK(nl == doctest::Approx(lam * na).epsilon(1e-12));
        }
    }
}

TEST_CASE("decay fit recovers synthetic exponentials") {
    std::vector<double> t, n;
    const double lam = -0.7364, C = 2.5;
    for (int k = 0; k <= 200; ++k) {
        t.push_back(0.05 * k);
        n.push_back(C * std::exp(lam * 0.05 * k));
    }
    DecayFit fit = fit_decay_rate(t, n);
    CHECK_FALSE(fit.underflow);
    CHECK(fit.lambda_hat == doctest::Approx(lam).epsilon(1e-6));
    CHECK(fit.r2 > 0.999999);
}

TEST_CASE("decay fit reports underflow on a constant trajectory") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 24, 8.0);
    StationaryResult st = solve_stationary(g, p, 0.0);
    REQUIRE(st.ok);
    Trajectory tr;
    for (int k = 0; k < 12; ++k) {
        tr.times.push_back(0.1 * k);
        tr.snapshots.push_back(st.M);
    }
    WeightSpec none;
    none.kind = WeightKind::none;
    DecayFit fit = fit_decay_rate(g, p, tr, st.M, 2.0, none);
    CHECK(fit.underflow);
}

TEST_CASE("decay rate matches the dense spectral gap") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 16, 8.0);
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    const double gap = spectral_gap_dense(op);
    CHECK(gap < 0.0);

    StationaryResult st = solve_stationary(g, p, 0.0);
    REQUIRE(st.ok);
    DensityField f0 = st.M;
    DensityField pert = random_field(g, 11, true);
    normalize_mass(g, pert);
    for (int q = 0; q < g.size(); ++q)
        f0.values[q] += 0.1 * (pert.values[q] - st.M.values[q]); // zero-mean perturbation

    EvolveConfig cfg;
    cfg.t_end = 12.0;
    cfg.snapshot_stride = 25;
    cfg.dt = imex_dt_bound(op, 0.5) * 0.2;
    Trajectory tr = run_linear(g, p, 0.0, f0, cfg);
    WeightSpec none;
    none.kind = WeightKind::none;
    DecayFit fit = fit_decay_rate(g, p, tr, st.M, 2.0, none);
    CHECK(fit.lambda_hat < 0.0);
    CHECK(fit.r2 > 0.99);
    CHECK(std::abs(fit.lambda_hat - gap) <= 0.1 * std::abs(gap));
}

TEST_CASE("smoothing curve: ceiling, monotone start, positive exponent") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 32, 64, 8.0);
    WeightSpec we;
    we.kind = WeightKind::exponential;
    we.alpha = 0.5;
    std::vector<double> times;
    for (double t = 0.002; t <= 2.0; t *= 1.3) times.push_back(t);
    times.insert(times.begin(), 0.0);
    EvolveConfig cfg;
    SmoothingCurve sc = smoothing_curve(g, p, g.n_v / 3, g.j_F + 3, times, we, cfg);

    CHECK(sc.ratio.front() == doctest::Approx(1.0 / g.cell_measure()).epsilon(1e-12));
    // non-increasing over the first decade
    for (size_t i = 1; i < sc.t.size() && sc.t[i] <= 10.0 * sc.t[1]; ++i)
        CHECK(sc.ratio[i] <= sc.ratio[i - 1] * (1.0 + 1e-12));
    CHECK(sc.fit_ok);
    CHECK(sc.nu_hat > 0.0);
    CHECK(sc.r2 > 0.95);

    // scaling invariance is structural: the ratio of norms is 0-homogeneous
    WeightSpec wrong;
    wrong.kind = WeightKind::polynomial;
    CHECK_THROWS_AS(smoothing_curve(g, p, 2, 2, times, wrong, cfg), std::invalid_argument);
}

TEST_CASE("harnack ratio: stationary field and scale invariance") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    StationaryResult st = solve_stationary(g, p, 0.0);
    REQUIRE(st.ok);
    HarnackReport hr = harnack_ratio(g, st.M, st.M, 0.1);
    CHECK_FALSE(hr.infinite);
    CHECK(hr.ratio >= 1.0);

    DensityField scaled = st.M;
    for (auto& v : scaled.values) v *= 7.5;
    HarnackReport hs = harnack_ratio(g, scaled, scaled, 0.1);
    CHECK(hs.ratio == doctest::Approx(hr.ratio).epsilon(1e-12));
}

TEST_CASE("harnack ratio spreads positivity from a Dirac") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 32, 64, 8.0);
    DensityField f0 = zero_field(g);
    f0.values[g.idx(g.n_v / 2, g.j_F + 3)] = 1.0 / g.cell_measure();
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    EvolveConfig cfg;
    cfg.dt = imex_dt_bound(op, 0.5);
    cfg.t_end = 1.0;
    cfg.snapshot_stride = std::max(1, static_cast<int>(std::llround(0.25 / cfg.dt)));
    Trajectory tr = run_linear(g, p, 0.0, f0, cfg);
    HarnackReport hr = harnack_ratio(g, tr, 0.1, 0.5, 1.0);
    CHECK_FALSE(hr.infinite);
    CHECK(hr.zero_cells.empty());
    CHECK(std::isfinite(hr.ratio));

    // zero field at T -> infinite ratio with offending cells listed
    HarnackReport bad = harnack_ratio(g, tr.snapshots.back(), zero_field(g), 0.1);
    CHECK(bad.infinite);
    CHECK_FALSE(bad.zero_cells.empty());
}

TEST_CASE("harnack ratio trend as T grows") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 16, 32, 8.0);
    DensityField f0 = zero_field(g);
    f0.values[g.idx(g.n_v / 2, g.j_F + 2)] = 1.0 / g.cell_measure();
    GeneratorOperator op = assemble_generator(g, p, 0.0);
    EvolveConfig cfg;
    cfg.dt = imex_dt_bound(op, 0.5);
    cfg.t_end = 4.0;
    cfg.snapshot_stride = std::max(1, static_cast<int>(std::llround(0.5 / cfg.dt)));
    Trajectory tr = run_linear(g, p, 0.0, f0, cfg);
    double prev = std::numeric_limits<double>::infinity();
    for (double T : {1.0, 2.0, 4.0}) {
        HarnackReport hr = harnack_ratio(g, tr, 0.1, 0.5, T);
        CHECK(hr.ratio <= prev * (1.0 + 1e-9));
        prev = hr.ratio;
    }
}

TEST_CASE("growth bound certificate is finite and refinement-stable") {
    ModelParams p = desk_params();
    WeightSpec w;
    w.kind = WeightKind::polynomial;
    w.k = 2.0;
    w.twist = true;
    EvolveConfig cfg;
    cfg.t_end = 2.0;

    Grid g1 = build_grid(p, 16, 32, 8.0);
    GrowthBoundReport r1 = growth_bound_certificate(g1, p, w, 5, 1234, cfg);
    CHECK(r1.finite);

    Grid g2 = build_grid(p, 32, 64, 8.0);
    GrowthBoundReport r2 = growth_bound_certificate(g2, p, w, 5, 1234, cfg);
    CHECK(r2.finite);

    // kappa is a growth *bound*; it stays within +-20% (or both tiny)
    const double scale = std::max({std::abs(r1.kappa_hat), std::abs(r2.kappa_hat), 0.05});
    CHECK(std::abs(r1.kappa_hat - r2.kappa_hat) <= 0.2 * scale);

    WeightSpec plain = w;
    plain.twist = false;
    CHECK_THROWS_AS(growth_bound_certificate(g1, p, plain, 2, 1, cfg), std::invalid_argument);
}

TEST_CASE("growth bound varies continuously in c") {
    WeightSpec w;
    w.kind = WeightKind::polynomial;
    w.k = 2.0;
    w.twist = true;
    EvolveConfig cfg;
    cfg.t_end = 1.0;
    double prev = 0.0;
    bool first = true;
    for (double c : {0.0, 0.05, 0.1}) {
        ModelParams p = desk_params();
        p.c = c;
        Grid g = build_grid(p, 12, 24, 8.0);
        GrowthBoundReport r = growth_bound_certificate(g, p, w, 3, 99, cfg);
        CHECK(r.finite);
        if (!first) {
            const double lo = std::min(prev, r.kappa_hat), hi = std::max(prev, r.kappa_hat);
            CHECK(hi <= 2.0 * std::max(std::abs(lo), 0.05) + std::abs(lo));
        }
        prev = r.kappa_hat;
        first = false;
    }
}

TEST_CASE("region cells respect the whole-cell rule") {
    ModelParams p = desk_params();
    Grid g = build_grid(p, 12, 12, 8.0);
    const std::vector<int> cells = region_cells(g, 0.2);
    CHECK_FALSE(cells.empty());
    for (int c : cells) {
        const int i = c % g.n_v, j = c / g.n_v;
        CHECK(g.vc[i] - 0.5 * g.dv > 0.2);
        CHECK(g.v_F - (g.vc[i] + 0.5 * g.dv) > 0.2);
        CHECK(g.yc[j] + 0.5 * g.dy < 5.0);
    }
    CHECK_THROWS_AS(region_cells(g, 1.5), std::invalid_argument);
}
