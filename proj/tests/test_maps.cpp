#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "seqdyn/maps.hpp"

using namespace seqdyn;
using Catch::Approx;

TEST_CASE("circle map lift, derivative, and wrap") {
    circle_map f(2, {{0.05, 1, 0.3}});
    for (int i = 0; i < 64; ++i) {
        double x = (i + 0.21) / 64.0;
        CHECK(f.lift(x) == Approx(2.0 * x + 0.05 * std::sin(two_pi * x + 0.3)).margin(1e-15));
        // Central difference vs the closed-form derivative.
        double h = 1e-6;
        double num = (f.lift(x + h) - f.lift(x - h)) / (2.0 * h);
        CHECK(f.lift_deriv(x) == Approx(num).margin(1e-8));
        CHECK(f.eval(x) >= 0.0);
        CHECK(f.eval(x) < 1.0);
    }
    CHECK(f.min_deriv() == Approx(2.0 - 0.05 * two_pi));
    CHECK(f.max_deriv() == Approx(2.0 + 0.05 * two_pi));
    CHECK(f.contraction() == Approx(1.0 / f.min_deriv()));
    CHECK_FALSE(f.is_linear());
    CHECK(circle_map(2, {}).is_linear());
}

TEST_CASE("circle map constructor enforces uniform expansion") {
    // 2 - 0.2 * 2*pi < 1: not expanding.
    try {
        circle_map f(2, {{0.2, 1, 0.0}});
        FAIL("expected not_expanding");
    } catch (const error& e) {
        CHECK(e.code() == errc::not_expanding);
    }
    CHECK_THROWS_AS(circle_map(1, {}), error);
    CHECK_THROWS_AS(circle_map(2, {{0.05, 0, 0.0}}), error);
    // Degree 3 tolerates a larger wobble.
    CHECK_NOTHROW(circle_map(3, {{0.2, 1, 0.0}}));
}

TEST_CASE("inverse branches partition the circle and invert eval") {
    circle_map f(3, {{0.08, 1, 1.1}, {0.02, 2, 0.4}});
    for (int i = 0; i < 97; ++i) {
        double y = (i + 0.5) / 97.0;
        for (int b = 0; b < f.degree(); ++b) {
            double x = f.inverse_branch(y, b);
            CHECK(circle_dist(f.eval(wrap_unit(x)), y) < 1e-12);
        }
    }
    // Branch points are the lift fibers of f(0); branch_of agrees with them.
    CHECK(f.branch_point(0) == 0.0);
    for (int b = 1; b < f.degree(); ++b) {
        double c = f.branch_point(b);
        CHECK(f.lift(c) == Approx(f.lift(0.0) + b).margin(1e-12));
        branch_ref left = f.branch_of(c - 1e-6);
        branch_ref right = f.branch_of(c + 1e-6);
        CHECK(left.index == b - 1);
        CHECK(right.index == b);
        CHECK(left.margin < 1e-5);
        CHECK(right.margin < 1e-5);
    }
}

TEST_CASE("inverse_near picks the preimage closest to the anchor") {
    circle_map f(2, {{0.03, 1, 0.0}});
    for (int i = 0; i < 50; ++i) {
        double anchor = (i + 0.37) / 50.0;
        double y = wrap_unit(f.eval(anchor) + 0.01);
        double z = f.inverse_near(y, anchor);
        CHECK(circle_dist(f.eval(z), y) < 1e-12);
        // The selected preimage beats every other branch preimage.
        double dz = circle_dist(z, anchor);
        for (int b = 0; b < f.degree(); ++b)
            CHECK(dz <= circle_dist(f.inverse_branch(y, b), anchor) + 1e-12);
        // Contraction: the preimage moved less than lambda * offset.
        CHECK(dz <= f.contraction() * 0.01 + 1e-12);
    }
    // An offset of ~1/2 means branch selection is ambiguous.
    double far = wrap_unit(f.eval(0.2) + 0.5);
    CHECK_THROWS_AS(f.inverse_near(far, 0.2), error);
}

TEST_CASE("torus map determinant and spectral checks") {
    CHECK_NOTHROW(torus_map(2, 1, 1, 1, {}));
    CHECK_NOTHROW(torus_map(1, 1, 1, 2, {}));
    try {
        torus_map bad(2, 0, 0, 2, {});
        FAIL("expected not_hyperbolic");
    } catch (const error& e) {
        CHECK(e.code() == errc::not_hyperbolic);
    }
    // det = +-1 but eigenvalues on the unit circle (rotation-like).
    CHECK_THROWS_AS(torus_map(0, -1, 1, 0, {}), error);
    // Perturbation too large for the declared splitting.
    CHECK_THROWS_AS(torus_map::cat({{{0.2, 0.2}, 1, 0, 0.0}}), error);

    torus_map cat = torus_map::cat();
    CHECK(cat.split().mu_u == Approx(0.5 * (3.0 + std::sqrt(5.0))));
    CHECK(cat.split().mu_s == Approx(0.5 * (3.0 - std::sqrt(5.0))));
}

TEST_CASE("torus invert is a two-sided inverse") {
    torus_map f = torus_map::cat({{{0.01, 0.008}, 1, 1, 0.2}});
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            point p = point::on_torus((i + 0.4) / 12.0, (j + 0.15) / 12.0);
            CHECK(dist(f.invert(f.eval(p)), p) < 1e-11);
            CHECK(dist(f.eval(f.invert(p)), p) < 1e-11);
        }
}

TEST_CASE("observable presets and certified constants") {
    observable c = observable::cos1();
    CHECK(c.eval_circle(0.0) == 1.0);
    CHECK(c.eval_circle(0.25) == Approx(0.0).margin(1e-15));
    CHECK(c.reference_mean() == 0.0);
    CHECK(c.mean_zero());
    CHECK(c.holder_constant() == Approx(two_pi));
    CHECK(c.sup_bound() == 1.0);

    observable cob = observable::doubling_coboundary();
    circle_map dbl(2, {});
    for (int i = 0; i < 40; ++i) {
        double x = (i + 0.31) / 40.0;
        double psi_fx = std::cos(two_pi * dbl.eval(x));
        double psi_x = std::cos(two_pi * x);
        CHECK(cob.eval_circle(x) == Approx(psi_fx - psi_x).margin(1e-12));
    }

    observable d;
    d.form = observable::kind::dist_to_zero;
    CHECK(d.eval_circle(0.9) == Approx(0.1));
    CHECK(d.reference_mean() == Approx(0.25));
    CHECK(d.holder_constant() == 1.0);
}

TEST_CASE("grid map distances bracket the analytic value") {
    circle_map f(2, {});
    circle_map g(2, {{0.05, 1, 0.0}});
    dist_bound d0 = c0_distance(f, g, 4096);
    CHECK(d0.lower <= 0.05 + 1e-12);
    CHECK(d0.upper >= 0.05);
    CHECK(d0.upper - d0.lower < 1e-3);

    dist_bound d1 = c1_distance(f, g, 4096);
    CHECK(d1.lower <= 0.05 * two_pi);
    CHECK(d1.upper >= 0.05 * two_pi);
    CHECK(d1.upper - d1.lower < 1e-2);

    // Identical maps: exactly zero measured, certificate stays tight.
    dist_bound same = c1_distance(g, g, 512);
    CHECK(same.lower == 0.0);
    CHECK(same.upper < 1e-2);

    torus_map tf = torus_map::cat();
    torus_map tg = torus_map::cat({{{0.01, 0.0}, 1, 0, 0.0}});
    dist_bound td = c0_distance(tf, tg, 64);
    CHECK(td.lower <= 0.01 + 1e-12);
    CHECK(td.upper >= 0.01);
}
