#pragma once

// Sequential conjugacies, computed pointwise as shadowing points.
//
// h_{F,G}(x) is the unique point whose F-orbit shadows the G-orbit of x. On
// the circle this is one inverse-branch pullback along the G-orbit anchors;
// on the torus it is one orbit-correction solve. A ConjugacySample holds h on
// a uniform grid together with certificates: the homeomorphism check
// (monotone lifted images on the circle), the sup-distance to the identity,
// and a self-consistency residual of the conjugacy relation
//     h^(n) o F_n = G_n o h    with    h^(n) = h_{F^(n), G^(n)}.
//
// Anchor orbits are computed in floating point. They drift away from the
// exact orbit at rate M^n, but remain machine pseudo-orbits (per-step defect
// of a few ulp), and the pullback weights anchor n by lambda^n, so the
// computed h differs from the exact one by O(depth * ulp).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "seqdyn/core.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"
#include "seqdyn/shadowing.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Pointwise conjugacy values
// ---------------------------------------------------------------------------

/// Depth at which the pullback truncation lambda^depth * 1/2 drops below tol/10.
inline int conjugacy_depth(double lambda, double tol = 1e-9) {
    double want = std::max(tol / 10.0, 1e-16);
    int d = static_cast<int>(std::ceil(std::log(want / 0.5) / std::log(lambda)));
    return std::max(d, 4);
}

namespace detail {

/// Full shadow chain z_0..z_depth for h_{F,G}(x) on the circle: z_0 = h(x) and
/// z_n tracks G_n(h(x)) as a certified machine orbit of the pullback window.
/// `worbit` are the members of G generating the anchors, `wpull` the members
/// of F pulled back through.
inline std::vector<double> conj_chain_circle(const std::vector<circle_map>& wpull,
                                             const std::vector<circle_map>& worbit, double x) {
    const std::size_t depth = wpull.size();
    std::vector<double> anchor(depth + 1);
    anchor[0] = wrap_unit(x);
    for (std::size_t j = 0; j < depth; ++j) anchor[j + 1] = worbit[j].eval(anchor[j]);
    return branch_pullback(wpull, anchor, anchor.back());
}

} // namespace detail

/// h_{F,G}(x): the point whose F-orbit shadows the G-orbit of x.
inline point point_conjugacy(const map_seq& F, const map_seq& G, point x, int depth = 0) {
    require(F.space() == G.space(), errc::domain_error, "incompatible phase spaces");
    if (F.space() == phase_space::circle) {
        if (depth <= 0) depth = conjugacy_depth(F.lambda_sup());
        std::vector<circle_map> wp = F.circle_window(0, depth);
        std::vector<circle_map> wo = G.circle_window(0, depth);
        return point::on_circle(detail::conj_chain_circle(wp, wo, x.x)[0]);
    }
    hyperbolic_splitting split = make_splitting(F);
    if (depth <= 0) depth = conjugacy_depth(1.0 / split.eigs.mu_u);
    std::vector<torus_map> wp = F.torus_window(0, depth);
    std::vector<point> anchor(static_cast<std::size_t>(depth) + 1);
    anchor[0] = x;
    for (int j = 0; j < depth; ++j)
        anchor[static_cast<std::size_t>(j) + 1] = G.step(j, anchor[static_cast<std::size_t>(j)]);
    int iters = 0;
    return detail::anosov_correct(wp, anchor, split, anchor, iters)[0];
}

// ---------------------------------------------------------------------------
// Grid samples
// ---------------------------------------------------------------------------

class conjugacy_sample {
public:
    /// Circle sample: images h(i/R), stored via the near-identity lift.
    conjugacy_sample(int R, std::vector<double> images, long shift, int depth)
        : space_(phase_space::circle), R_(R), shift_(shift), depth_(depth) {
        require(static_cast<int>(images.size()) == R, errc::parameter_out_of_range,
                "image count must equal the resolution");
        lift_.resize(images.size());
        sup_dist_ = 0.0;
        for (int i = 0; i < R; ++i) {
            double xi = static_cast<double>(i) / R;
            double d = wrap_diff(images[static_cast<std::size_t>(i)], xi);
            lift_[static_cast<std::size_t>(i)] = xi + d;
            sup_dist_ = std::max(sup_dist_, std::fabs(d));
        }
        monotone_ = true;
        for (int i = 0; i + 1 < R; ++i)
            if (!(lift_[static_cast<std::size_t>(i)] < lift_[static_cast<std::size_t>(i) + 1]))
                monotone_ = false;
        if (!(lift_.back() < lift_.front() + 1.0)) monotone_ = false;
    }

    /// Torus sample: images h(i/R, j/R), row-major, stored as displacements.
    conjugacy_sample(int R, const std::vector<point>& images, long shift, int depth)
        : space_(phase_space::torus), R_(R), shift_(shift), depth_(depth) {
        require(static_cast<int>(images.size()) == R * R, errc::parameter_out_of_range,
                "image count must equal resolution^2");
        disp_.resize(images.size());
        sup_dist_ = 0.0;
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j) {
                point grid = point::on_torus(static_cast<double>(i) / R, static_cast<double>(j) / R);
                vec2 d = torus_diff(images[static_cast<std::size_t>(i * R + j)], grid);
                disp_[static_cast<std::size_t>(i * R + j)] = d;
                sup_dist_ = std::max(sup_dist_, d.norm());
            }
        monotone_ = true; // no order structure on T^2; certificate is circle-only
    }

    phase_space space() const { return space_; }
    int resolution() const { return R_; }
    long shift() const { return shift_; }
    int depth() const { return depth_; }
    double sup_dist_to_identity() const { return sup_dist_; }
    bool homeomorphism_certified() const { return monotone_; }
    double residual() const { return residual_; }
    void set_residual(double r) { residual_ = r; }
    double chain_defect() const { return chain_defect_; }
    void set_chain_defect(double d) { chain_defect_ = d; }

    const std::vector<double>& lifted() const { return lift_; }

    /// Interpolated evaluation: piecewise-linear in the lift (circle) or
    /// bilinear on the displacement field (torus).
    double eval_circle(double x) const {
        require(space_ == phase_space::circle, errc::domain_error, "not a circle sample");
        double xr = wrap_unit(x) * R_;
        int i = std::min(static_cast<int>(xr), R_ - 1);
        double t = xr - i;
        double L0 = lift_[static_cast<std::size_t>(i)];
        double L1 = i + 1 < R_ ? lift_[static_cast<std::size_t>(i) + 1] : lift_.front() + 1.0;
        return wrap_unit(L0 + t * (L1 - L0));
    }

    point eval(point x) const {
        if (space_ == phase_space::circle) return point::on_circle(eval_circle(x.x));
        double xr = wrap_unit(x.x) * R_, yr = wrap_unit(x.y) * R_;
        int i = std::min(static_cast<int>(xr), R_ - 1), j = std::min(static_cast<int>(yr), R_ - 1);
        double tx = xr - i, ty = yr - j;
        auto d = [&](int a, int b) { return disp_[static_cast<std::size_t>((a % R_) * R_ + (b % R_))]; };
        vec2 v = d(i, j) * ((1 - tx) * (1 - ty)) + d(i + 1, j) * (tx * (1 - ty)) +
                 d(i, j + 1) * ((1 - tx) * ty) + d(i + 1, j + 1) * (tx * ty);
        return point::on_torus(wrap_unit(x.x + v.x), wrap_unit(x.y + v.y));
    }

    /// Worst-case interpolation error bound for a Holder-alpha map with
    /// constant Hc: the image of a grid cell has diameter <= Hc * (1/R)^alpha.
    double interpolation_error(double holder_c, double alpha) const {
        return holder_c * std::pow(1.0 / R_, alpha);
    }

private:
    phase_space space_;
    int R_;
    long shift_;
    int depth_;
    double sup_dist_{0.0};
    double residual_{0.0};
    double chain_defect_{0.0};
    bool monotone_{false};
    std::vector<double> lift_; // circle: near-identity lift of the images
    std::vector<vec2> disp_;   // torus: displacement field h(x) - x
};

// ---------------------------------------------------------------------------
// Sequential conjugacy over a grid
// ---------------------------------------------------------------------------

inline void require_power_of_two(int R) {
    require(R >= 2 && (R & (R - 1)) == 0, errc::parameter_out_of_range,
            "resolution must be a power of two");
}

/// Sample h_{F,G} on a uniform grid. The reported residual is the defect of
/// the conjugacy relation h^(1)(f_0(x)) = g_0(h(x)) measured on a subsample;
/// the chain defect certifies that each pointwise shadow is a machine orbit.
inline conjugacy_sample sequential_conjugacy(const map_seq& F, const map_seq& G, int R = 4096,
                                             int depth = 0, int threads = 1) {
    require(F.space() == G.space(), errc::domain_error, "incompatible phase spaces");
    require_power_of_two(R);

    if (F.space() == phase_space::circle) {
        if (depth <= 0) depth = conjugacy_depth(F.lambda_sup());
        // One extra level so the shifted relation check reuses materialized maps.
        std::vector<circle_map> wp = F.circle_window(0, depth + 1);
        std::vector<circle_map> wo = G.circle_window(0, depth + 1);
        std::vector<circle_map> wp1(wp.begin() + 1, wp.end());
        std::vector<circle_map> wo1(wo.begin() + 1, wo.end());
        wp.pop_back();
        wo.pop_back();

        std::vector<double> images(static_cast<std::size_t>(R));
        std::vector<double> chain_defects(static_cast<std::size_t>(R), 0.0);
        std::vector<double> rel_defects(static_cast<std::size_t>(R), 0.0);
        parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t i) {
            double x = static_cast<double>(i) / R;
            std::vector<double> z = detail::conj_chain_circle(wp, wo, x);
            images[i] = z[0];
            if (i % 32 == 0) {
                double cd = 0.0;
                for (std::size_t n = 0; n + 1 < z.size(); ++n)
                    cd = std::max(cd, circle_dist(wp[n].eval(z[n]), z[n + 1]));
                chain_defects[i] = cd;
                // Relation h^(1)(f_0(x)) vs g_0(h(x)) = z_1.
                double h1 = detail::conj_chain_circle(wp1, wo1, wo[0].eval(x))[0];
                rel_defects[i] = circle_dist(h1, z[1]);
            }
        });
        conjugacy_sample s(R, std::move(images), F.shift(), depth);
        s.set_chain_defect(*std::max_element(chain_defects.begin(), chain_defects.end()));
        s.set_residual(*std::max_element(rel_defects.begin(), rel_defects.end()));
        return s;
    }

    hyperbolic_splitting split = make_splitting(F);
    if (depth <= 0) depth = conjugacy_depth(std::max(1.0 / split.eigs.mu_u, std::fabs(split.eigs.mu_s)));
    std::vector<torus_map> wp = F.torus_window(0, depth);
    std::vector<point> images(static_cast<std::size_t>(R) * R);
    std::vector<double> chain_defects(static_cast<std::size_t>(R) * R, 0.0);
    parallel_for(static_cast<std::size_t>(R) * R, threads, [&](std::size_t idx) {
        int i = static_cast<int>(idx) / R, j = static_cast<int>(idx) % R;
        point x = point::on_torus(static_cast<double>(i) / R, static_cast<double>(j) / R);
        std::vector<point> anchor(static_cast<std::size_t>(depth) + 1);
        anchor[0] = x;
        for (int n = 0; n < depth; ++n)
            anchor[static_cast<std::size_t>(n) + 1] = G.step(n, anchor[static_cast<std::size_t>(n)]);
        int iters = 0;
        std::vector<point> z = detail::anosov_correct(wp, anchor, split, anchor, iters);
        images[idx] = z[0];
        if (idx % 64 == 0) {
            double cd = 0.0;
            for (int n = 0; n < depth; ++n)
                cd = std::max(cd, dist(wp[static_cast<std::size_t>(n)].eval(z[static_cast<std::size_t>(n)]),
                                       z[static_cast<std::size_t>(n) + 1]));
            chain_defects[idx] = cd;
        }
    });
    conjugacy_sample s(R, images, F.shift(), depth);
    s.set_chain_defect(*std::max_element(chain_defects.begin(), chain_defects.end()));
    return s;
}

/// h^(k): the conjugacy of the shifted pair (F^(k), G^(k)).
inline conjugacy_sample shifted_conjugacy(const map_seq& F, const map_seq& G, long k, int R = 4096,
                                          int depth = 0, int threads = 1) {
    return sequential_conjugacy(F.shifted(k), G.shifted(k), R, depth, threads);
}

/// Smallest shift k at which the conjugacy of the k-shifted pair stays within
/// `threshold` of the identity (measured on an R-point grid).  Used to decide
/// from which index on scale-matched comparisons between a convergent-tail
/// sequence and its limit are certified.
inline int settling_index(const map_seq& F, const circle_map& f, double threshold,
                          int R = 256, int k_max = 64) {
    map_seq G = map_seq::constant(f);
    for (int k = 0; k < k_max; ++k) {
        conjugacy_sample h = shifted_conjugacy(F, G, k, R);
        if (h.sup_dist_to_identity() < threshold) return k;
    }
    fail(errc::non_convergence, "settling_index: shifted conjugacies stay away from the identity");
}

// ---------------------------------------------------------------------------
// Conjugacy relation residual
// ---------------------------------------------------------------------------

/// Numerical defect of the sequential-conjugacy relation over all shifts up
/// to k_max:  max_{n <= k_max} max_x  d( h^(n)(F_n(x)), G_n(h(x)) )  with
/// h^(n) = h_{G^(n), F^(n)} (G-orbits shadow F-orbits, the orientation under
/// which the relation composes exactly). Pointwise h-values are evaluated by
/// direct shadowing, not grid interpolation, so the result isolates the
/// truncation defect at the given depth.
inline double conjugacy_residual(const map_seq& F, const map_seq& G, int k_max, int R = 4096,
                                 int depth = 0, int threads = 1) {
    require(F.space() == G.space(), errc::domain_error, "incompatible phase spaces");
    require(F.space() == phase_space::circle, errc::domain_error,
            "relation residual implemented for circle sequences");
    require_power_of_two(R);
    require(k_max >= 1, errc::parameter_out_of_range, "k_max must be >= 1");
    if (depth <= 0) depth = conjugacy_depth(G.lambda_sup());

    // Windows long enough for every shifted pullback: g_0 .. g_{k_max+depth-1},
    // pre-sliced per shift so the grid loop allocates only anchor scratch.
    std::vector<circle_map> wg = G.circle_window(0, k_max + depth);
    std::vector<circle_map> wf = F.circle_window(0, k_max + depth);
    std::vector<std::vector<circle_map>> wg_shift(static_cast<std::size_t>(k_max) + 1);
    for (int n = 0; n <= k_max; ++n)
        wg_shift[static_cast<std::size_t>(n)].assign(wg.begin() + n, wg.begin() + n + depth);

    std::vector<double> worst(static_cast<std::size_t>(R), 0.0);
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t i) {
        double x = static_cast<double>(i) / R;
        // F-orbit anchors a_0..a_{k_max+depth}.
        std::vector<double> a(static_cast<std::size_t>(k_max + depth) + 1);
        a[0] = x;
        for (int j = 0; j < k_max + depth; ++j) a[static_cast<std::size_t>(j) + 1] = wf[static_cast<std::size_t>(j)].eval(a[static_cast<std::size_t>(j)]);

        // h(x) with its chain: z_n = G_n(h(x)), pulled from terminal depth.
        std::vector<double> a0(a.begin(), a.begin() + depth + 1);
        std::vector<double> z = detail::branch_pullback(wg_shift[0], a0, a0.back());

        double w = 0.0;
        for (int n = 1; n <= k_max; ++n) {
            // Independent evaluation of h^(n) at F_n(x): pull terminal
            // a_{n+depth} back through g_n .. g_{n+depth-1}.
            std::vector<double> an(a.begin() + n, a.begin() + n + depth + 1);
            double hn = detail::branch_pullback(wg_shift[static_cast<std::size_t>(n)], an, an.back())[0];
            // Chain continuation G_n(h(x)) for n <= depth.
            double gn_h = z[static_cast<std::size_t>(std::min(n, depth))];
            for (int j = depth; j < n; ++j) gn_h = wg[static_cast<std::size_t>(j)].eval(gn_h);
            w = std::max(w, circle_dist(hn, gn_h));
        }
        worst[i] = w;
    });
    return *std::max_element(worst.begin(), worst.end());
}

// ---------------------------------------------------------------------------
// Quasi-conjugacy for expanding sequences
// ---------------------------------------------------------------------------

struct quasi_conjugacy_report {
    conjugacy_sample h;        // h = h_{G,F}: G-orbits shadow F-orbits
    double epsilon{0.0};       // certified |||F - G|||_C0 upper bound
    double lambda{0.0};
    double id_bound{0.0};      // lambda/(1-lambda) * epsilon
    double defect_bound{0.0};  // 2 * lambda/(1-lambda) * epsilon
    double sup_dist{0.0};      // measured ||h - id||_C0 on the grid
    double defect{0.0};        // measured max_{n<=n_check} max_x d(G_n(h x), h(F_n x))
    int n_checked{0};
};

/// Build the quasi-conjugacy h = h_{G,F} for an expanding pair: the F-orbit of
/// x is an epsilon-pseudo-orbit of G, so its G-shadow h(x) satisfies both
/// ||h - id|| <= lambda/(1-lambda) eps and the two-sided defect bound
/// d(G_n(h x), h(F_n x)) <= 2 lambda/(1-lambda) eps.
inline quasi_conjugacy_report quasi_conjugacy_expanding(const map_seq& F, const map_seq& G,
                                                        int R = 4096, int depth = 0,
                                                        int n_check = 16, int threads = 1) {
    require(F.space() == phase_space::circle && G.space() == phase_space::circle,
            errc::domain_error, "expanding quasi-conjugacy is a circle construction");
    require_power_of_two(R);
    const double lam = G.lambda_sup();
    if (depth <= 0) depth = conjugacy_depth(lam, 1e-10);

    seq_dist_result dd = seq_distance(F, G, 0, R);
    const double eps = dd.upper;
    require(eps < (1.0 - lam) / lam * 0.99 * G.circle_at(0).branch_radius(),
            errc::admissibility_violated,
            "|||F-G||| too large for the quasi-conjugacy construction");

    const int horizon = n_check + depth;
    std::vector<circle_map> wf = F.circle_window(0, horizon);
    std::vector<circle_map> wg = G.circle_window(0, horizon);
    std::vector<circle_map> wg0(wg.begin(), wg.begin() + depth);

    std::vector<double> images(static_cast<std::size_t>(R));
    std::vector<double> defects(static_cast<std::size_t>(R), 0.0);
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t i) {
        double x = static_cast<double>(i) / R;
        // F-orbit anchors of x, long enough for all fresh evaluations below.
        std::vector<double> a(static_cast<std::size_t>(horizon) + 1);
        a[0] = x;
        for (int j = 0; j < horizon; ++j) a[static_cast<std::size_t>(j) + 1] = wf[static_cast<std::size_t>(j)].eval(a[static_cast<std::size_t>(j)]);

        std::vector<double> a0(a.begin(), a.begin() + depth + 1);
        std::vector<double> z = detail::branch_pullback(wg0, a0, a0.back());
        images[i] = z[0];

        // Defect: the chain gives G_n(h(x)); h(F_n(x)) needs a fresh pullback
        // of the F-orbit of a_n through the *unshifted* leading members of G.
        double w = 0.0;
        for (int n = 1; n <= n_check; ++n) {
            std::vector<double> b(static_cast<std::size_t>(depth) + 1);
            b[0] = a[static_cast<std::size_t>(n)];
            for (int j = 0; j < depth; ++j) b[static_cast<std::size_t>(j) + 1] = wf[static_cast<std::size_t>(j)].eval(b[static_cast<std::size_t>(j)]);
            double h_fnx = detail::branch_pullback(wg0, b, b.back())[0];
            w = std::max(w, circle_dist(z[static_cast<std::size_t>(n)], h_fnx));
        }
        defects[i] = w;
    });

    conjugacy_sample s(R, std::move(images), F.shift(), depth);
    quasi_conjugacy_report rep{std::move(s), eps, lam, lam / (1.0 - lam) * eps,
                               2.0 * lam / (1.0 - lam) * eps, 0.0, 0.0, n_check};
    rep.sup_dist = rep.h.sup_dist_to_identity();
    rep.defect = *std::max_element(defects.begin(), defects.end());
    return rep;
}

// ---------------------------------------------------------------------------
// Inverse check and the symbolic oracle
// ---------------------------------------------------------------------------

/// Max over the grid of d(hGF(hFG(x)), x), with interpolated off-grid
/// evaluation; bounded by interpolation error for a true inverse pair.
inline double inverse_check(const conjugacy_sample& hFG, const conjugacy_sample& hGF) {
    require(hFG.space() == hGF.space() && hFG.resolution() == hGF.resolution(),
            errc::domain_error, "samples live on different grids");
    double w = 0.0;
    if (hFG.space() == phase_space::circle) {
        int R = hFG.resolution();
        for (int i = 0; i < R; ++i) {
            double x = static_cast<double>(i) / R;
            w = std::max(w, circle_dist(hGF.eval_circle(hFG.eval_circle(x)), x));
        }
        return w;
    }
    int R = hFG.resolution();
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j) {
            point x = point::on_torus(static_cast<double>(i) / R, static_cast<double>(j) / R);
            w = std::max(w, dist(hGF.eval(hFG.eval(x)), x));
        }
    return w;
}

/// Classical symbolic conjugacy between two full-branch expanding circle maps
/// of the same degree: record the branch itinerary of x under f, then pull a
/// seed back through the matching inverse branches of g. The result is the
/// unique point whose g-itinerary equals the f-itinerary of x, up to the
/// lambda_g^depth truncation. Entirely independent of the shadowing code
/// paths, which is what makes it an oracle.
inline point itinerary_oracle(const circle_map& f, const circle_map& g, point x, int depth,
                              double boundary_margin = 1e-9) {
    require(f.degree() == g.degree(), errc::domain_error, "degrees differ");
    std::vector<int> code(static_cast<std::size_t>(depth));
    double v = wrap_unit(x.x);
    for (int j = 0; j < depth; ++j) {
        branch_ref br = f.branch_of(v);
        require(br.margin > boundary_margin, errc::boundary_itinerary,
                "orbit point " + std::to_string(v) + " too close to a branch boundary");
        code[static_cast<std::size_t>(j)] = br.index;
        v = f.eval(v);
    }
    double z = 0.5;
    for (int j = depth - 1; j >= 0; --j) z = g.inverse_branch(z, code[static_cast<std::size_t>(j)]);
    return point::on_circle(z);
}

} // namespace seqdyn
