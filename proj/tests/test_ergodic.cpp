#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "seqdyn/ergodic.hpp"

using namespace seqdyn;
using Catch::Approx;

namespace {

empirical_measure cloud(std::vector<double> xs) {
    empirical_measure mu;
    mu.space = phase_space::circle;
    for (double x : xs) mu.samples.push_back(point::on_circle(x));
    return mu;
}

} // namespace

TEST_CASE("measure distance matches hand-computed CDF oscillation") {
    empirical_measure mu = cloud({0.1, 0.5});
    empirical_measure nu = cloud({0.3});
    // D jumps to +1/2 at 0.1, to -1/2 at 0.3, back to 0 at 0.5.
    CHECK(measure_distance(mu, nu) == Approx(0.5));
    CHECK(measure_distance(nu, mu) == Approx(0.5));
    CHECK(measure_distance(mu, mu) == 0.0);

    // Rotating both clouds moves the cut, not the value.
    empirical_measure mur = cloud({0.47, 0.87});
    empirical_measure nur = cloud({0.67});
    CHECK(measure_distance(mur, nur) == Approx(0.5));

    // Metric triangle inequality on three small clouds.
    empirical_measure rho = cloud({0.2, 0.8});
    CHECK(measure_distance(mu, nu) <=
          measure_distance(mu, rho) + measure_distance(rho, nu) + 1e-15);

    CHECK_THROWS_AS(measure_distance(mu, empirical_measure{}), error);
}

TEST_CASE("reference measures refine consistently") {
    empirical_measure coarse = reference_measure(phase_space::circle, 1000);
    empirical_measure fine = reference_measure(phase_space::circle, 4000);
    REQUIRE(coarse.size() == 1000);
    CHECK(coarse.samples[0].x == Approx(0.0005));
    // Each coarse cell holds one atom centered among four fine ones, so the
    // CDF gap never exceeds half a coarse cell weight.
    CHECK(measure_distance(coarse, fine) < 1e-3);

    empirical_measure torus = reference_measure(phase_space::torus, 16);
    CHECK(torus.size() == 16);
    CHECK(torus.samples[0].x == Approx(0.125));
    CHECK_THROWS_AS(reference_measure(phase_space::torus, 10), error);

    std::vector<double> h = coarse.histogram(10);
    for (double m : h) CHECK(m == Approx(0.1));
}

TEST_CASE("random tape orbits equidistribute to the reference measure") {
    rng_stream rng(2024, {7});
    bit_tape tape = bit_tape::random(rng, (1l << 16) + 64);
    REQUIRE(tape.horizon() >= 1l << 16);
    empirical_measure orbit = orbit_measure(tape, 1l << 16);
    empirical_measure ref = reference_measure(phase_space::circle, 1l << 16);
    CHECK(measure_distance(orbit, ref) < 0.02);

    // The two orbit_measure paths agree where the float orbit is still exact.
    empirical_measure direct =
        orbit_measure(map_seq::constant(circle_map(2, {})),
                      point::on_circle(tape.window(0)), 40);
    window_cursor cur(tape);
    for (int m = 0; m < 40; ++m) {
        CHECK(direct.samples[static_cast<std::size_t>(m)].x == Approx(cur.value()).margin(1e-9));
        cur.advance();
    }
}

TEST_CASE("pushforward through the identity conjugacy is exact") {
    map_seq F = map_seq::constant(circle_map(2, {}));
    conjugacy_sample h = sequential_conjugacy(F, F, 256);
    CHECK(h.sup_dist_to_identity() == 0.0);

    empirical_measure mu = reference_measure(phase_space::circle, 1024);
    empirical_measure push = pushforward(h, mu);
    CHECK(push.origin == measure_origin::pushforward);
    CHECK(measure_distance(push, mu) < 1e-3);

    // A mixture of identical pushforwards is the same distribution.
    empirical_measure mix = periodic_limit_measure({h, h}, mu);
    CHECK(mix.origin == measure_origin::mixture);
    CHECK(mix.size() == 2 * mu.size());
    CHECK(measure_distance(mix, push) == 0.0);
}

TEST_CASE("reference measure is nearly invariant on average") {
    map_seq F = map_seq::constant(circle_map(2, {}));
    empirical_measure mu = reference_measure(phase_space::circle, 4096);
    CHECK(average_invariance_defect(F, mu, 3) < 1e-3);
}

TEST_CASE("float orbits of the doubling map collapse; tapes do not") {
    map_seq F = map_seq::constant(circle_map(2, {}));
    point x = point::on_circle(0.37);
    // 54 doublings exhaust the mantissa: the float orbit lands exactly on the
    // fixed point and stays there.
    CHECK(F.compose(54, x).x == 0.0);

    observable phi = observable::cos1();
    double map_avg = birkhoff_series(F, phi, x, 1000).back();
    CHECK(map_avg > 0.8);  // dominated by phi(0) = 1 after the collapse

    rng_stream rng(11, {3});
    bit_tape tape = bit_tape::random(rng, 1100);
    double tape_avg = birkhoff_series(tape, phi, 1000).back();
    CHECK(std::fabs(tape_avg) < 0.1);  // genuine generic-orbit average

    CHECK_THROWS_AS(birkhoff_series(tape, phi, tape.horizon() + 1), error);
}

TEST_CASE("digit-block point has divergent Birkhoff averages") {
    circle_map f(2, {});
    observable phi = observable::cos1();
    irregular_probe probe = irregular_point(f, phi, 100000, 1000);

    CHECK(probe.fixed_avg == Approx(1.0));
    CHECK(probe.cycle_avg == Approx(-0.5));
    REQUIRE(probe.checkpoints.size() >= 4);
    CHECK(probe.checkpoints[0] == 4);
    CHECK(probe.checkpoints[1] == 84);
    CHECK(probe.checkpoints[2] == 1764);
    CHECK(probe.checkpoints[3] == 37044);

    // Block ends sit within 1/21 of the fresh block's own periodic average.
    CHECK(probe.limsup >= 0.9);
    CHECK(probe.liminf <= -0.4);
    CHECK(probe.trace.back().first == probe.trace_len);

    // The coboundary observable cannot separate the two periodic orbits.
    CHECK_THROWS_AS(irregular_point(f, observable::doubling_coboundary(), 100000), error);
    // Itinerary digits are only meaningful for the plain doubling map.
    CHECK_THROWS_AS(irregular_point(circle_map(2, {{0.01, 1, 0.0}}), phi, 100000), error);
}

TEST_CASE("transported averages keep the divergence within the budget") {
    circle_map f(2, {});
    observable phi = observable::cos1();
    irregular_probe probe = irregular_point(f, phi, 100000, 1000);
    map_seq F = map_seq::tail_circle(f, {{0.02, 1, 0.4}}, decay_schedule::power(1.0, 1.6));

    transported_trace t = transported_averages(F, probe, phi, 25);
    CHECK(t.max_budget < 0.1);
    CHECK(t.final_budget <= t.max_budget + 1e-15);
    CHECK(std::fabs(t.limsup - probe.limsup) < 0.05);
    CHECK(std::fabs(t.liminf - probe.liminf) < 0.05);
    CHECK(t.limsup - t.liminf > 1.0);  // the gap survives transport

    // Pullback depth must fit inside the tape slack.
    CHECK_THROWS_AS(transported_averages(F, probe, phi, 200), error);
}
