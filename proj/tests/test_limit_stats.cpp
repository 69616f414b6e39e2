#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "seqdyn/limit_stats.hpp"

using namespace seqdyn;
using Catch::Approx;

namespace {

observable nonzero_mean_obs() {
    observable o;
    o.form = observable::kind::dist_to_zero;
    return o;
}

} // namespace

TEST_CASE("quadrature oracle: doubling lag covariances of cos are orthogonal") {
    // C_j = int cos(2 pi x) cos(2 pi 2^j x) dx by midpoint rule; the grid sum
    // is exact for these frequencies, so this pins sigma^2 = C_0 = 1/2
    // independently of any orbit sampling.
    const long N = 1l << 16;
    double c0 = 0.0;
    for (long i = 0; i < N; ++i) {
        double x = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        double c = std::cos(2.0 * M_PI * x);
        c0 += c * c;
    }
    c0 /= static_cast<double>(N);
    CHECK(c0 == Approx(0.5).margin(1e-13));

    for (int j = 1; j <= 10; ++j) {
        double cj = 0.0;
        double freq = std::pow(2.0, j);
        for (long i = 0; i < N; ++i) {
            double x = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
            cj += std::cos(2.0 * M_PI * x) * std::cos(2.0 * M_PI * freq * x);
        }
        cj /= static_cast<double>(N);
        CHECK(std::fabs(cj) < 1e-12);
    }
}

TEST_CASE("Green-Kubo variance of cos under doubling is one half") {
    circle_map f(2, {});
    observable phi = observable::cos1();
    green_kubo_result gk = sigma_green_kubo(f, phi, 1l << 18, 40, 7);
    CHECK(std::fabs(gk.sigma2 - 0.5) < 0.05);
    CHECK(gk.sigma2_se < 0.02);
    CHECK(gk.lag_cov[0] == Approx(0.5).margin(0.02));
    CHECK(std::fabs(gk.lag_cov[1]) < 0.02);
    CHECK(std::fabs(gk.lag_cov[5]) < 0.02);

    // Deterministic in the seed.
    green_kubo_result again = sigma_green_kubo(f, phi, 1l << 18, 40, 7);
    CHECK(again.sigma2 == gk.sigma2);
    green_kubo_result other = sigma_green_kubo(f, phi, 1l << 18, 40, 8);
    CHECK(other.sigma2 != gk.sigma2);

    // Two sample sizes agree within Monte Carlo noise.
    green_kubo_result half = sigma_green_kubo(f, phi, 1l << 17, 40, 7);
    CHECK(std::fabs(half.sigma2 - gk.sigma2) < 0.04);

    // Float-orbit engine for a nonlinear map lands in the same neighborhood.
    green_kubo_result pert = sigma_green_kubo(circle_map(2, {{0.01, 1, 0.0}}), phi,
                                              1l << 16, 40, 7);
    CHECK(std::fabs(pert.sigma2 - 0.5) < 0.1);

    try {
        sigma_green_kubo(f, nonzero_mean_obs(), 1l << 15, 20, 7);
        FAIL("expected not_mean_zero");
    } catch (const error& e) {
        CHECK(e.code() == errc::not_mean_zero);
    }
}

TEST_CASE("coboundary observable has vanishing asymptotic variance") {
    circle_map f(2, {});
    green_kubo_result gk = sigma_green_kubo(f, observable::doubling_coboundary(), 1l << 17, 40, 5);
    // C_0 = 1 and C_1 = -1/2 cancel: sigma^2 = 0 exactly in the limit.
    CHECK(gk.lag_cov[0] == Approx(1.0).margin(0.03));
    CHECK(gk.lag_cov[1] == Approx(-0.5).margin(0.03));
    CHECK(std::fabs(gk.sigma2) < 0.02);
}

TEST_CASE("logarithmic checkpoints are powers of four capped by n") {
    CHECK(log_checkpoints(64) == std::vector<long>{64});
    CHECK(log_checkpoints(1000) == std::vector<long>{64, 256, 1000});
    CHECK(log_checkpoints(4096) == std::vector<long>{64, 256, 1024, 4096});
}

TEST_CASE("Kolmogorov p-value matches the classical series") {
    // Pick d so the corrected statistic lambda equals exactly 1; the
    // classical series gives Q(1) = 2(e^-2 - e^-8 + e^-18 - ...) = 0.2699997.
    const long m = 1000;
    const double sm = std::sqrt(static_cast<double>(m));
    const double d = 1.0 / (sm + 0.12 + 0.11 / sm);
    CHECK(ks_p_value(d, m) == Approx(0.2699996716).margin(1e-6));

    CHECK(ks_p_value(0.5, 1000) < 1e-10);
    CHECK(ks_p_value(0.01, 1000) > ks_p_value(0.05, 1000));

    // Samples drawn from the limit law itself must score a healthy p-value.
    rng_stream rng(5, {99});
    std::vector<double> v(2000);
    for (double& x : v) x = rng.gaussian();
    double ks = ks_vs_normal(v);
    CHECK(ks < 0.03);
    CHECK(ks_p_value(ks, 2000) > 0.05);
}

TEST_CASE("partial-sum ensembles flag the tail decay admissibility") {
    observable phi = observable::cos1();
    circle_map f(2, {});

    series_stats slow = partial_sum_ensemble(
        map_seq::tail_circle(f, {{0.05, 1, 0.3}}, decay_schedule::power(1.0, 0.4)), phi, 256, 8, 3);
    CHECK_FALSE(slow.rate_checked);

    series_stats fast = partial_sum_ensemble(
        map_seq::tail_circle(f, {{0.05, 1, 0.3}}, decay_schedule::power(1.0, 1.6)), phi, 256, 8, 3);
    CHECK(fast.rate_checked);

    series_stats geo = partial_sum_ensemble(
        map_seq::tail_circle(f, {{0.05, 1, 0.3}}, decay_schedule::geometric(1.0, 0.5)), phi, 256, 8, 3);
    CHECK(geo.rate_checked);

    series_stats con = partial_sum_ensemble(map_seq::constant(f), phi, 256, 8, 3);
    CHECK(con.rate_checked);

    CHECK_THROWS_AS(partial_sum_ensemble(map_seq::periodic(std::vector<circle_map>{f, f}),
                                         phi, 256, 8, 3),
                    error);
    CHECK_THROWS_AS(partial_sum_ensemble(map_seq::constant(f), nonzero_mean_obs(), 256, 8, 3),
                    error);
    CHECK_THROWS_AS(partial_sum_ensemble(map_seq::constant(f), phi, 32, 8, 3), error);
    CHECK_THROWS_AS(partial_sum_ensemble(map_seq::constant(f), phi, 256, 1, 3), error);

    // Same seed, same sums; the layout is checkpoints x ensemble.
    REQUIRE(con.checkpoints == std::vector<long>{64, 256});
    REQUIRE(con.sums.size() == 2);
    REQUIRE(con.sums[0].size() == 8);
    series_stats rerun = partial_sum_ensemble(map_seq::constant(f), phi, 256, 8, 3);
    CHECK(rerun.sums == con.sums);
}

TEST_CASE("normalized partial sums of cos pass the normality check") {
    observable phi = observable::cos1();
    series_stats st = partial_sum_ensemble(map_seq::constant(circle_map(2, {})), phi,
                                           1024, 600, 21);
    clt_report rep = clt_check(st, 0.5);
    CHECK_FALSE(rep.degenerate);
    REQUIRE(rep.rows.size() == st.checkpoints.size());
    CHECK(rep.final_variance == Approx(0.5).margin(0.1));
    CHECK(rep.rows.back().p_value > 0.01);
    CHECK(rep.pass);
}

TEST_CASE("degenerate declarations are verified against the ensemble") {
    rng_stream rng(13, {1});
    series_stats st;
    st.checkpoints = {64, 1024};
    st.ensemble = 1000;
    st.seed = 13;
    st.sums.assign(2, std::vector<double>(1000));
    for (std::size_t c = 0; c < 2; ++c)
        for (double& s : st.sums[c])
            s = std::sqrt(static_cast<double>(st.checkpoints[c])) * rng.gaussian();

    // Normal sums, declared variance 1: every checkpoint row is scored.
    clt_report normal = clt_check(st, 1.0);
    CHECK(normal.rows.size() == 2);
    CHECK(normal.pass);
    CHECK(normal.final_variance == Approx(1.0).margin(0.15));

    // The same sums contradict a degenerate declaration.
    try {
        clt_check(st, 0.0);
        FAIL("expected degenerate_variance");
    } catch (const error& e) {
        CHECK(e.code() == errc::degenerate_variance);
    }

    // Genuinely collapsing sums validate the degenerate branch.
    series_stats flat = st;
    for (auto& row : flat.sums)
        for (double& s : row) s = 0.3 * std::sin(s);
    clt_report deg = clt_check(flat, 0.0);
    CHECK(deg.degenerate);
    CHECK(deg.pass);
    CHECK(deg.rows.empty());
    CHECK(deg.final_variance < 0.05);

    series_stats tiny = st;
    tiny.ensemble = 100;
    CHECK_THROWS_AS(clt_check(tiny, 1.0), error);
}

TEST_CASE("admissible rate schedules keep the drift budget sublinear") {
    rate_schedule_report rep = asip_rate_schedule(1.0, 0.1, 1.0, 1l << 14);
    CHECK(rep.a[0] == Approx(1.0));
    CHECK(rep.a[1] == Approx(1.0));  // max(1, j) floors the first step
    CHECK(rep.a[4] == Approx(std::pow(4.0, -0.6)));
    for (std::size_t j = 1; j < rep.a.size(); ++j) CHECK(rep.a[j] <= rep.a[j - 1] + 1e-15);
    REQUIRE(rep.drift.size() == rep.checkpoints.size());
    // D_n ~ n^0.4 / 0.4, so the log-log slope sits at 1/2 - eps.
    CHECK(rep.fitted_exponent == Approx(0.4).margin(0.05));
    CHECK_FALSE(rep.boundary_case);

    // The fitted constant stabilizes as the horizon grows.
    rate_schedule_report shorter = asip_rate_schedule(1.0, 0.1, 1.0, 1l << 12);
    rate_schedule_report longer = asip_rate_schedule(1.0, 0.1, 1.0, 1l << 16);
    CHECK(longer.fitted_c / shorter.fitted_c < 1.05);
    CHECK(longer.fitted_c >= shorter.fitted_c - 1e-12);

    CHECK(asip_rate_schedule(1.0, 0.46, 1.0, 512).boundary_case);

    CHECK_THROWS_AS(asip_rate_schedule(0.0, 0.1, 1.0, 512), error);
    CHECK_THROWS_AS(asip_rate_schedule(1.0, 0.6, 1.0, 512), error);
    CHECK_THROWS_AS(asip_rate_schedule(1.0, 0.1, 1.5, 512), error);
    CHECK_THROWS_AS(asip_rate_schedule(1.0, 0.1, 1.0, 128), error);
}
