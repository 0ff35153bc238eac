#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>

#include "vck/model.hpp"

using namespace vck;

namespace {
ModelParams desk_params() {
    ModelParams p;
    p.v_F = 1.0; p.v_E = 2.0; p.y_L = 1.0;
    p.a_star = 1.0; p.y_star = 1.0; p.c = 0.0;
    return p;
}
} // namespace

TEST_CASE("parameter validation") {
    ModelParams p = desk_params();
    CHECK_NOTHROW(p.validate());
    CHECK(p.y_F() == doctest::Approx(1.0));

    ModelParams bad = p;
    bad.v_E = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p; bad.y_L = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p; bad.c = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p; bad.a_ceiling = 0.5; // below max(a_star, y_star)
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("a_ceiling default sits strictly above 2(a_star+y_star)") {
    ModelParams p = desk_params();
    CHECK(p.effective_a_ceiling() > 2.0 * (p.a_star + p.y_star));
}

TEST_CASE("voltage flux values") {
    ModelParams p = desk_params();
    CHECK(eval_J(p, 0.0, 3.0) == doctest::Approx(6.0));          // y * v_E at v = 0
    CHECK(eval_J(p, 1.0, 1.0) == doctest::Approx(0.0));          // vanishes at (v_F, y_F)
    CHECK(eval_J(p, 0.5, 2.0) == doctest::Approx(2.5));
}

TEST_CASE("flux sign structure around y_F") {
    ModelParams p = desk_params();
    const double yF = p.y_F();
    for (double s : {1.1, 1.5, 3.0, 7.0})
        CHECK(eval_J(p, p.v_F, yF * s) > 0.0);
    for (double s : {0.1, 0.5, 0.9})
        CHECK(eval_J(p, p.v_F, yF * s) < 0.0);
    for (double y : {0.01, 0.5, 2.0, 8.0})
        CHECK(eval_J(p, 0.0, y) > 0.0); // inflow orientation at v = 0
}

TEST_CASE("coefficients with and without coupling") {
    ModelParams p = desk_params();
    SUBCASE("c = 0 decouples") {
        Coefficients co = eval_coeffs(p, 5.0);
        CHECK(co.drift(0.0) == doctest::Approx(1.0));
        CHECK(co.diffusion == doctest::Approx(1.0));
        CHECK_FALSE(co.band_violation);
        Coefficients co0 = eval_coeffs(p, 0.0);
        CHECK(co.drift_intercept == co0.drift_intercept);
        CHECK(co.diffusion == co0.diffusion);
    }
    SUBCASE("direct formula") {
        ModelParams q = p;
        q.a_star = 0.5; q.c = 0.1;
        Coefficients co = eval_coeffs(q, 2.0);
        CHECK(co.drift(0.0) == doctest::Approx(1.2));
        CHECK(co.diffusion == doctest::Approx(0.52));
        CHECK(co.drift(co.drift_intercept) == doctest::Approx(0.0)); // drift vanishes at b
    }
    SUBCASE("band violation flag") {
        ModelParams q = p;
        q.c = 1.0;
        Coefficients co = eval_coeffs(q, 10.0); // a = 1 + 10 > cap = 4.04
        CHECK(co.band_violation);
    }
    CHECK_THROWS_AS(eval_coeffs(p, -1.0), std::invalid_argument);
}

TEST_CASE("weight admissibility") {
    WeightSpec w;
    w.kind = WeightKind::polynomial; w.k = 1.0;
    CHECK_FALSE(w.admissible());
    CHECK_THROWS_AS(eval_plain_weight(w, 1.0), std::invalid_argument);
    w.k = 2.0;
    CHECK(w.admissible());
    CHECK(eval_plain_weight(w, 1.0) == doctest::Approx(2.0)); // <1>^2 = 1 + 1
    w.kind = WeightKind::exponential; w.alpha = -1.0;
    CHECK_FALSE(w.admissible());
    CHECK_THROWS_AS(eval_plain_weight(w, 1.0), std::invalid_argument);
    w.alpha = 0.5;
    CHECK(eval_plain_weight(w, 2.0) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("cutoffs are sharp on the stated intervals") {
    const double yF = 1.0;
    CHECK(chi_cutoff(0.5 * yF, yF) == 1.0);
    CHECK(chi_cutoff(0.2, yF) == 1.0);
    CHECK(chi_cutoff(yF, yF) == 0.0);
    CHECK(chi_cutoff(2.0, yF) == 0.0);
    CHECK(chi_cutoff(0.75, yF) > 0.0);
    CHECK(chi_cutoff(0.75, yF) < 1.0);
    CHECK(xi_cutoff(yF, yF) == 1.0);
    CHECK(xi_cutoff(2.0 * yF, yF) == 0.0);
}

TEST_CASE("twisted weight equals one below y_F/2") {
    ModelParams p = desk_params();
    WeightSpec w;
    w.kind = WeightKind::polynomial; w.k = 2.0; w.twist = true;
    for (double pe : {1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()})
        for (double v : {0.1, 0.5, 0.9})
            for (double y : {0.05, 0.2, 0.49})
                CHECK(eval_weight(w, p, v, y, pe) == 1.0);
}

TEST_CASE("twisted-to-plain ratio bounded on a 64x64 sampling") {
    ModelParams p = desk_params();
    WeightSpec tw;
    tw.kind = WeightKind::polynomial; tw.k = 2.0; tw.twist = true;
    WeightSpec pl = tw;
    pl.twist = false;

    for (double pe : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int i = 0; i < 64; ++i) {
            for (int j = 0; j < 64; ++j) {
                const double v = (i + 0.5) / 64.0 * p.v_F;
                const double y = (j + 0.5) / 64.0 * 8.0;
                const double r = eval_weight(tw, p, v, y, pe) / eval_weight(pl, p, v, y, pe);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
                CHECK(eval_weight(tw, p, v, y, pe) > 0.0);
            }
        }
        CHECK(lo > 0.0);
        CHECK(std::isfinite(hi));
    }
}
