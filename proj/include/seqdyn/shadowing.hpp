#pragma once

// Pseudo-orbit shadowing for sequential systems.
//
// Expanding circle sequences: the shadow point is produced by pulling the
// terminal anchor back through the inverse branches selected by the
// pseudo-orbit itself. Inverse branches contract by lambda = 1/min|f'|, so
// the nested preimages converge geometrically and
//     beta <= lambda/(1-lambda) * delta + lambda^depth * delta1.
//
// Hyperbolic torus sequences: the shadow orbit solves the orbit-correction
// equation z_{n+1} = f_n(z_n) by quasi-Newton iteration in the eigenbasis of
// the shared linear model. Corrections split into an unstable component
// (contracts when propagated backward) and a stable component (contracts
// forward), so the linearized system is solved by one backward and one
// forward sweep per iteration.
//
// A returned ShadowResult stores the whole corrected orbit, not only its
// initial point: forward float iteration of an expanding map amplifies
// rounding by M^n, so "iterate the shadow point forward" is not a usable
// verification beyond ~50 steps. The stored orbit carries its own machine
// defect certificate instead.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seqdyn/core.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Pseudo-orbits
// ---------------------------------------------------------------------------

struct pseudo_orbit {
    std::vector<point> x;    // x_0 ... x_k, k >= 1
    double delta{0.0};       // recorded defect: max_n d(f_n(x_n), x_{n+1})
    std::uint64_t seed{0};   // 0 when not generated from noise

    long steps() const { return static_cast<long>(x.size()) - 1; }
};

/// Recompute max_n d(f_n(x_n), x_{n+1}) for a point list against F.
inline double orbit_defect(const map_seq& F, const std::vector<point>& x) {
    require(x.size() >= 2, errc::parameter_out_of_range, "orbit needs at least two points");
    double d = 0.0;
    for (std::size_t n = 0; n + 1 < x.size(); ++n)
        d = std::max(d, dist(F.step(static_cast<long>(n), x[n]), x[n + 1]));
    return d;
}

inline pseudo_orbit make_pseudo_orbit(const map_seq& F, std::vector<point> pts) {
    pseudo_orbit p;
    p.delta = orbit_defect(F, pts);
    p.x = std::move(pts);
    return p;
}

/// Noisy orbit x_{n+1} = f_n(x_n) + uniform noise of magnitude <= delta.
/// Deterministic per seed; the recorded defect is the actual one (<= delta).
inline pseudo_orbit perturbed_orbit(const map_seq& F, point x0, double delta, long len,
                                    std::uint64_t seed) {
    require(delta >= 0.0, errc::parameter_out_of_range, "negative noise bound");
    require(len >= 1, errc::parameter_out_of_range, "need at least one step");
    rng_stream rng(seed, {0x70726221u, 0});
    std::vector<point> pts;
    pts.reserve(static_cast<std::size_t>(len) + 1);
    pts.push_back(x0);
    for (long n = 0; n < len; ++n) {
        point y = F.step(n, pts.back());
        if (delta > 0.0) {
            if (F.space() == phase_space::circle) {
                y.x = wrap_unit(y.x + rng.uniform(-delta, delta));
            } else {
                // Uniform in the disc of radius delta, so the defect bound is
                // exactly delta in the quotient metric.
                double r = delta * std::sqrt(rng.u01());
                double th = two_pi * rng.u01();
                y.x = wrap_unit(y.x + r * std::cos(th));
                y.y = wrap_unit(y.y + r * std::sin(th));
            }
        }
        pts.push_back(y);
    }
    pseudo_orbit p = make_pseudo_orbit(F, std::move(pts));
    p.seed = seed;
    return p;
}

// ---------------------------------------------------------------------------
// Shadow results
// ---------------------------------------------------------------------------

struct shadow_result {
    std::vector<point> orbit;      // certified machine orbit y_0 ... y_m
    double beta{0.0};              // max_n d(y_n, x_n) over the shadowed range
    double orbit_defect{0.0};      // max_n d(f_n(y_n), y_{n+1}) of the stored orbit
    int iterations{0};
    int depth{0};                  // pseudo-orbit steps actually used
    bool unique_certified{false};
    double expansiveness_eps{0.0}; // scale 2*beta was compared against (expanding)
    double restart_gap{0.0};       // distance between independent solver runs

    const point& x() const { return orbit.front(); }
};

/// Expansiveness scale for an expanding circle family: while two points stay
/// closer than 1/(2M), the quotient distance of their images is the lift
/// distance, which grows by at least min|f'| per step. Safety factor 0.99.
inline double expansiveness_constant(const map_seq& F) {
    require(F.space() == phase_space::circle, errc::domain_error, "circle families only");
    return 0.99 * 0.5 / F.deriv_sup();
}

// ---------------------------------------------------------------------------
// Expanding pullback
// ---------------------------------------------------------------------------

namespace detail {

/// Pull `terminal` back through the inverse branches selected by the anchors:
/// z_n is the preimage of z_{n+1} under w_n nearest to anchor_n. Each step
/// contracts the distance to the true shadow orbit by lambda and adds at most
/// lambda * delta, which yields the geometric tracing bound.
inline std::vector<double> branch_pullback(const std::vector<circle_map>& w,
                                           const std::vector<double>& anchor, double terminal) {
    const std::size_t k = w.size();
    std::vector<double> z(k + 1);
    z[k] = terminal;
    for (std::size_t i = k; i-- > 0;) z[i] = w[i].inverse_near(z[i + 1], anchor[i]);
    return z;
}

} // namespace detail

/// Shadow an expanding-circle pseudo-orbit by nested inverse-branch pullback.
/// The terminal anchor is the last pseudo-orbit point; the truncation term
/// lambda^depth * delta1 (delta1 = 1/2) is driven below tol/10 when the orbit
/// is long enough, and reported through the a-priori bound otherwise.
inline shadow_result shadow_expanding(const map_seq& F, const pseudo_orbit& p, double tol = 1e-12) {
    require(F.space() == phase_space::circle, errc::domain_error, "circle families only");
    const double lam = F.lambda_sup();
    const double delta1 = 0.5;
    require(p.delta * lam / (1.0 - lam) < 0.99 * F.circle_at(0).branch_radius(),
            errc::defect_too_large, "defect exceeds the admissible shadowing threshold");

    const long len = p.steps();
    long depth = len;
    // Depth beyond which the truncation term falls below tol/10.
    double want = std::max(tol / 10.0, 1e-16);
    long depth_needed = static_cast<long>(std::ceil(std::log(want / delta1) / std::log(lam)));
    depth = std::min(len, std::max<long>(depth_needed, 1));

    std::vector<circle_map> w = F.circle_window(0, static_cast<int>(depth));
    std::vector<double> anchor(static_cast<std::size_t>(depth) + 1);
    for (long n = 0; n <= depth; ++n) anchor[static_cast<std::size_t>(n)] = p.x[static_cast<std::size_t>(n)].x;

    std::vector<double> z = detail::branch_pullback(w, anchor, anchor.back());

    shadow_result r;
    r.depth = static_cast<int>(depth);
    r.iterations = static_cast<int>(depth);
    r.orbit.reserve(z.size());
    for (double v : z) r.orbit.push_back(point::on_circle(v));
    for (long n = 0; n <= depth; ++n)
        r.beta = std::max(r.beta, circle_dist(z[static_cast<std::size_t>(n)], anchor[static_cast<std::size_t>(n)]));
    for (long n = 0; n < depth; ++n)
        r.orbit_defect = std::max(
            r.orbit_defect, circle_dist(w[static_cast<std::size_t>(n)].eval(z[static_cast<std::size_t>(n)]),
                                        z[static_cast<std::size_t>(n) + 1]));
    r.expansiveness_eps = expansiveness_constant(F);
    r.unique_certified = 2.0 * r.beta < r.expansiveness_eps;
    return r;
}

// ---------------------------------------------------------------------------
// Hyperbolic splitting and the torus solver
// ---------------------------------------------------------------------------

struct hyperbolic_splitting {
    eigen_split eigs;          // unstable/stable directions and rates of the linear model
    double lambda_tilde{0.0};  // uniform contraction bound, >= max(1/mu_u, |mu_s|)
    double cone_diameter{0.0}; // a: the cone |xi_s| <= a |xi_u| is forward invariant
    double manifold_size{0.0}; // delta1
    double deriv_bound{0.0};   // M
    int block_length{0};       // N: smallest with lambda_tilde^N < 1/2
    double angle{0.0};         // angle between the eigendirections

    /// Admissible defect for a target tracing distance: (1-lambda)/(8 M^N) * beta.
    double zeta(double beta) const {
        return (1.0 - lambda_tilde) / (8.0 * std::pow(deriv_bound, block_length)) * beta;
    }
};

/// Build the splitting from the (shared) linear model of a torus sequence and
/// certify the cone condition Df(x) C_a subset C_{lambda*a} on a sample grid.
inline hyperbolic_splitting make_splitting(const map_seq& F, int grid = 32, double cone_a = 0.5) {
    require(F.space() == phase_space::torus, errc::domain_error, "torus families only");
    torus_map f0 = F.torus_at(0);
    const eigen_split es = f0.split();

    hyperbolic_splitting s;
    s.eigs = es;
    s.cone_diameter = cone_a;
    s.manifold_size = 0.5;
    s.deriv_bound = F.deriv_sup();
    s.angle = std::acos(std::clamp(std::fabs(es.vu.dot(es.vs)), 0.0, 1.0));
    require(s.angle > 1e-6, errc::not_hyperbolic, "eigendirections nearly parallel");

    // Pass 1: worst contraction/expansion rates of the perturbed derivative
    // along the model eigendirections, over a grid and all distinct members.
    const mat2 basis{es.vu.x, es.vs.x, es.vu.y, es.vs.y};
    const mat2 to_eigen = basis.inverse();
    std::vector<long> probe_idx = {0};
    if (F.form() == map_seq::kind::periodic)
        for (long j = 1; j < F.period(); ++j) probe_idx.push_back(j);
    double worst_expand = std::numeric_limits<double>::infinity();
    double worst_contract = 0.0;
    auto for_each_derivative = [&](auto&& body) {
        for (long idx : probe_idx) {
            torus_map f = F.torus_at(idx);
            for (int i = 0; i < grid; ++i)
                for (int j = 0; j < grid; ++j)
                    body(f.derivative(point::on_torus((i + 0.5) / grid, (j + 0.5) / grid)));
        }
    };
    for_each_derivative([&](const mat2& D) {
        vec2 cu = to_eigen.apply(D.apply(es.vu));
        vec2 cs = to_eigen.apply(D.apply(es.vs));
        worst_expand = std::min(worst_expand, std::fabs(cu.x));
        worst_contract = std::max(worst_contract, std::fabs(cs.y));
    });
    require(worst_expand > 1.0 + 1e-9 && worst_contract < 1.0 - 1e-9, errc::not_hyperbolic,
            "perturbation destroys uniform hyperbolicity along the model splitting");
    s.lambda_tilde = std::max(1.0 / worst_expand, worst_contract);

    // Pass 2: invariant-cone certificate with the final rate. A boundary
    // vector vu + sgn*a*vs must map into the tightened cone of diameter
    // lambda_tilde * a.
    bool cone_ok = true;
    for_each_derivative([&](const mat2& D) {
        for (double sgn : {-1.0, 1.0}) {
            vec2 c = to_eigen.apply(D.apply(es.vu + es.vs * (sgn * cone_a)));
            if (std::fabs(c.y) > s.lambda_tilde * cone_a * std::fabs(c.x) + 1e-12) cone_ok = false;
        }
    });
    require(cone_ok, errc::not_hyperbolic, "cone condition failed on the sample grid");
    s.block_length = 1;
    while (std::pow(s.lambda_tilde, s.block_length) >= 0.5) ++s.block_length;
    return s;
}

namespace detail {

/// Quasi-Newton orbit correction against the window w, starting from z and
/// converging to the unique exact orbit with z^u_k = anchor^u_k and
/// z^s_0 = anchor^s_0 (the finite window leaves a free stable direction at
/// the start and a free unstable direction at the end; both are pinned to the
/// anchors so the discrete boundary-value problem has exactly one solution).
inline std::vector<point> anosov_correct(const std::vector<torus_map>& w,
                                         const std::vector<point>& anchor,
                                         const hyperbolic_splitting& split,
                                         std::vector<point> z, int& iters_out) {
    const long k = static_cast<long>(w.size());
    const eigen_split& es = split.eigs;
    const mat2 basis{es.vu.x, es.vs.x, es.vu.y, es.vs.y};
    const mat2 to_eigen = basis.inverse();
    std::vector<double> ru(static_cast<std::size_t>(k)), rs(static_cast<std::size_t>(k));
    std::vector<double> eu(static_cast<std::size_t>(k) + 1), esv(static_cast<std::size_t>(k) + 1);
    double res = 0.0;
    int it = 0;
    for (; it < 64; ++it) {
        res = 0.0;
        for (long n = 0; n < k; ++n) {
            vec2 r = torus_diff(w[static_cast<std::size_t>(n)].eval(z[static_cast<std::size_t>(n)]),
                                z[static_cast<std::size_t>(n) + 1]);
            vec2 rc = to_eigen.apply(r);
            ru[static_cast<std::size_t>(n)] = rc.x;
            rs[static_cast<std::size_t>(n)] = rc.y;
            res = std::max(res, r.norm());
        }
        vec2 end_gap = to_eigen.apply(
            torus_diff(anchor[static_cast<std::size_t>(k)], z[static_cast<std::size_t>(k)]));
        vec2 start_gap = to_eigen.apply(torus_diff(anchor[0], z[0]));
        if (res < 1e-14 && std::fabs(end_gap.x) < 1e-14 && std::fabs(start_gap.y) < 1e-14) break;
        eu[static_cast<std::size_t>(k)] = end_gap.x;
        for (long n = k - 1; n >= 0; --n)
            eu[static_cast<std::size_t>(n)] =
                (eu[static_cast<std::size_t>(n) + 1] - ru[static_cast<std::size_t>(n)]) / es.mu_u;
        esv[0] = start_gap.y;
        for (long n = 0; n < k; ++n)
            esv[static_cast<std::size_t>(n) + 1] =
                es.mu_s * esv[static_cast<std::size_t>(n)] + rs[static_cast<std::size_t>(n)];
        for (long n = 0; n <= k; ++n) {
            vec2 e = es.vu * eu[static_cast<std::size_t>(n)] + es.vs * esv[static_cast<std::size_t>(n)];
            z[static_cast<std::size_t>(n)].x = wrap_unit(z[static_cast<std::size_t>(n)].x + e.x);
            z[static_cast<std::size_t>(n)].y = wrap_unit(z[static_cast<std::size_t>(n)].y + e.y);
        }
    }
    require(res < 1e-12, errc::non_convergence,
            "orbit correction stalled at residual " + std::to_string(res));
    iters_out = it;
    return z;
}

} // namespace detail

/// Shadow a torus pseudo-orbit by quasi-Newton orbit correction in the model
/// eigenbasis: residuals r_n = f_n(z_n) - z_{n+1} are killed by solving
/// A e_n - e_{n+1} = -r_n, with the unstable component swept backward and the
/// stable component swept forward. Uniqueness is certified by re-solving from
/// a uniformly shifted initialization.
inline shadow_result shadow_anosov(const map_seq& F, const pseudo_orbit& p,
                                   const hyperbolic_splitting& split, double tol = 1e-12) {
    require(F.space() == phase_space::torus, errc::domain_error, "torus families only");
    const long k = p.steps();
    require(std::pow(split.lambda_tilde, static_cast<double>(k)) * split.manifold_size <
                std::max(tol, 1e-15),
            errc::truncation_dominates, "orbit too short for the requested tolerance");
    require(p.delta <= split.zeta(split.manifold_size), errc::defect_too_large,
            "defect exceeds the admissible threshold zeta");

    std::vector<torus_map> w = F.torus_window(0, static_cast<int>(k));

    int it1 = 0, it2 = 0;
    std::vector<point> z = detail::anosov_correct(w, p.x, split, p.x, it1);

    // Restart certificate: re-solve from a uniformly shifted initialization.
    std::vector<point> z2 = p.x;
    for (auto& q : z2) {
        q.x = wrap_unit(q.x + 1e-3);
        q.y = wrap_unit(q.y + 1e-3);
    }
    z2 = detail::anosov_correct(w, p.x, split, std::move(z2), it2);
    double gap = 0.0;
    for (long n = 0; n <= k; ++n)
        gap = std::max(gap, dist(z[static_cast<std::size_t>(n)], z2[static_cast<std::size_t>(n)]));

    shadow_result r;
    r.orbit = std::move(z);
    r.iterations = it1 + it2;
    r.depth = static_cast<int>(k);
    for (long n = 0; n <= k; ++n)
        r.beta = std::max(r.beta, dist(r.orbit[static_cast<std::size_t>(n)], p.x[static_cast<std::size_t>(n)]));
    for (long n = 0; n < k; ++n)
        r.orbit_defect = std::max(r.orbit_defect,
                                  dist(w[static_cast<std::size_t>(n)].eval(r.orbit[static_cast<std::size_t>(n)]),
                                       r.orbit[static_cast<std::size_t>(n) + 1]));
    r.restart_gap = gap;
    r.unique_certified = gap < 1e-10;
    return r;
}

// ---------------------------------------------------------------------------
// Expansiveness probe
// ---------------------------------------------------------------------------

/// Smallest N such that every probed pair at distance >= delta reaches
/// distance >= eps0 within N steps. Pairs are seeded at distance exactly delta
/// (the extremal case) across a base grid and, on the torus, across several
/// displacement directions that avoid the stable line.
inline int expansiveness_probe(const map_seq& F, double eps0, double delta, int grid = 512,
                               int cap = 256) {
    require(eps0 > 0 && delta > 0, errc::parameter_out_of_range, "scales must be positive");
    if (delta >= eps0) return 0;
    int worst = 0;
    auto probe_pair = [&](point a, point b) {
        for (int n = 0; n <= cap; ++n) {
            if (dist(a, b) >= eps0) {
                worst = std::max(worst, n);
                return;
            }
            a = F.step(n, a);
            b = F.step(n, b);
        }
        fail(errc::no_separation, "pair failed to separate within " + std::to_string(cap) + " steps");
    };
    if (F.space() == phase_space::circle) {
        for (int i = 0; i < grid; ++i) {
            double x = (i + 0.5) / grid;
            probe_pair(point::on_circle(x), point::on_circle(wrap_unit(x + delta)));
        }
    } else {
        const vec2 dirs[] = {{1.0, 0.0}, {0.0, 1.0}, {0.7071067811865476, 0.7071067811865476},
                             {0.9486832980505138, -0.31622776601683794}};
        int side = std::max(4, static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid)))));
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                for (const vec2& d : dirs) {
                    point a = point::on_torus((i + 0.5) / side, (j + 0.5) / side);
                    point b = point::on_torus(wrap_unit(a.x + delta * d.x), wrap_unit(a.y + delta * d.y));
                    probe_pair(a, b);
                }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Lipschitz fit
// ---------------------------------------------------------------------------

struct lipschitz_report {
    std::vector<double> delta;     // schedule
    std::vector<double> beta_max;  // per-delta max tracing distance
    double L_hat{0.0};             // max beta/delta over the schedule
    double slope{0.0};             // log-log fit slope (exact Lipschitz -> 1)
    double intercept{0.0};
    bool degenerate{false};        // all beta = 0 (exact orbits)
    double failure_fraction{0.0};
};

/// Shadow `trials` pseudo-orbits per delta and fit log(max beta) vs log(delta).
inline lipschitz_report lipschitz_fit(const map_seq& F, const std::vector<double>& schedule,
                                      int trials, long len, std::uint64_t seed, int threads = 1) {
    require(!schedule.empty() && trials > 0, errc::parameter_out_of_range, "empty schedule");
    lipschitz_report rep;
    rep.delta = schedule;
    rep.beta_max.assign(schedule.size(), 0.0);

    hyperbolic_splitting split;
    if (F.space() == phase_space::torus) split = make_splitting(F);

    std::size_t failures = 0;
    for (std::size_t si = 0; si < schedule.size(); ++si) {
        std::vector<double> betas(static_cast<std::size_t>(trials), 0.0);
        std::vector<int> failed(static_cast<std::size_t>(trials), 0);
        parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
            rng_stream rng(seed, {0x4c697073u, static_cast<std::uint64_t>(si),
                                  static_cast<std::uint64_t>(t)});
            point x0 = F.space() == phase_space::circle
                           ? point::on_circle(rng.u01())
                           : point::on_torus(rng.u01(), rng.u01());
            std::uint64_t trial_seed = seed ^ (0x9e3779b97f4a7c15ull * (t + 1) + si);
            try {
                pseudo_orbit p = perturbed_orbit(F, x0, schedule[si], len, trial_seed);
                shadow_result r = F.space() == phase_space::circle
                                      ? shadow_expanding(F, p)
                                      : shadow_anosov(F, p, split);
                betas[t] = r.beta;
            } catch (const error&) {
                failed[t] = 1;
            }
        });
        for (int t = 0; t < trials; ++t) {
            rep.beta_max[si] = std::max(rep.beta_max[si], betas[static_cast<std::size_t>(t)]);
            failures += static_cast<std::size_t>(failed[static_cast<std::size_t>(t)]);
        }
    }
    rep.failure_fraction =
        static_cast<double>(failures) / (static_cast<double>(trials) * schedule.size());

    double bmax = *std::max_element(rep.beta_max.begin(), rep.beta_max.end());
    if (bmax == 0.0) {
        rep.degenerate = true; // exact orbits: beta identically zero
        return rep;
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (rep.beta_max[i] <= 0.0) continue;
        rep.L_hat = std::max(rep.L_hat, rep.beta_max[i] / schedule[i]);
        lx.push_back(std::log(schedule[i]));
        ly.push_back(std::log(rep.beta_max[i]));
    }
    if (lx.size() >= 2) {
        line_fit f = fit_line(lx, ly);
        rep.slope = f.slope;
        rep.intercept = f.intercept;
    }
    return rep;
}

} // namespace seqdyn
