#pragma once

// Concrete map families on S^1 and T^2: trig-polynomial perturbations of linear
// models, so every derivative and norm bound is closed-form rather than
// finite-differenced.
//
//   circle:  lift(x) = d*x + sum_i amp_i * sin(2*pi*(k_i*x) + phase_i),  d >= 2
//   torus:   f(v)    = A*v + sum_i amp_i * sin(2*pi*(k_i . v) + phase_i),  |det A| = 1
//
// Circle maps must be uniformly expanding (min lift' > 1); torus linear parts
// must have a real split spectrum off the unit circle. Both checks are
// certified from closed-form bounds at construction.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqdyn/core.hpp"

namespace seqdyn {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Expanding circle maps
// ---------------------------------------------------------------------------

/// One term amp * sin(2*pi*k*x + phase) of a circle-map perturbation.
struct trig_term {
    double amp{0.0};
    int k{1};
    double phase{0.0};
};

/// Fundamental-interval location of a point under a full-branch map.
struct branch_ref {
    int index{0};
    double margin{0.0};
};

class circle_map {
public:
    circle_map() : circle_map(2, {}) {}

    circle_map(int degree, std::vector<trig_term> terms)
        : degree_(degree), terms_(std::move(terms)) {
        require(degree_ >= 2, errc::parameter_out_of_range, "circle map degree must be >= 2");
        double wobble = 0.0, amp_sum = 0.0, curv = 0.0;
        for (const auto& t : terms_) {
            require(t.k >= 1, errc::parameter_out_of_range, "harmonic index must be >= 1");
            wobble += two_pi * t.k * std::fabs(t.amp);
            amp_sum += std::fabs(t.amp);
            curv += two_pi * two_pi * t.k * t.k * std::fabs(t.amp);
        }
        min_deriv_ = degree_ - wobble;
        max_deriv_ = degree_ + wobble;
        amp_sum_ = amp_sum;
        second_deriv_ub_ = curv;
        require(min_deriv_ > 1.0, errc::not_expanding,
                "perturbation too large: min lift derivative " + std::to_string(min_deriv_) +
                    " <= 1");
    }

    int degree() const { return degree_; }
    const std::vector<trig_term>& terms() const { return terms_; }

    double lift(double x) const {
        double v = degree_ * x;
        for (const auto& t : terms_) v += t.amp * std::sin(two_pi * t.k * x + t.phase);
        return v;
    }

    double lift_deriv(double x) const {
        double v = degree_;
        for (const auto& t : terms_) v += t.amp * two_pi * t.k * std::cos(two_pi * t.k * x + t.phase);
        return v;
    }

    double eval(double x) const { return wrap_unit(lift(x)); }
    point eval(const point& p) const { return point::on_circle(lift(p.x)); }

    /// Certified lower bound on inf |lift'| (exact for a single term with phase 0).
    double min_deriv() const { return min_deriv_; }
    /// Certified upper bound on sup |lift'|.
    double max_deriv() const { return max_deriv_; }
    /// Uniform contraction rate of every inverse branch: 1 / min_deriv.
    double contraction() const { return 1.0 / min_deriv_; }
    /// Certified bound on sup |lift''|.
    double second_deriv_bound() const { return second_deriv_ub_; }
    /// All inverse branches are globally defined; delta0 is the radius on which
    /// the contraction contract is advertised.
    double branch_radius() const { return 0.25; }

    /// Value of y in the lift fiber over branch b: lift(p) = lift(0) + b + frac(y - f(0)).
    /// The b-th fundamental interval is [c_b, c_{b+1}) with lift(c_b) = lift(0) + b.
    double inverse_branch(double y, int branch) const {
        require(branch >= 0 && branch < degree_, errc::parameter_out_of_range,
                "branch index out of range");
        double base = lift(0.0);
        double target = base + branch + wrap_unit(y - wrap_unit(base));
        return solve_lift(target);
    }

    /// The unique preimage of y nearest to `anchor`: the target lift fiber is
    /// lift(anchor) + (y - f(anchor)) with the offset taken in (-1/2, 1/2], so
    /// the preimage lies within lambda/2 of the anchor. Offsets approaching
    /// 1/2 mean two preimages are nearly equidistant: branch selection is
    /// ambiguous and the defect is outside the admissible range.
    double inverse_near(double y, double anchor) const {
        double off = wrap_diff(y, eval(anchor));
        require(std::fabs(off) <= 0.49, errc::defect_too_large,
                "inverse-branch selection ambiguous: value offset " + std::to_string(off));
        return wrap_unit(solve_lift(lift(anchor) + off));
    }

    /// Left endpoint of the b-th fundamental interval.
    double branch_point(int branch) const {
        require(branch >= 0 && branch <= degree_, errc::parameter_out_of_range,
                "branch index out of range");
        return branch == 0 ? 0.0 : solve_lift(lift(0.0) + branch);
    }

    /// Index of the fundamental interval containing x, plus a lower bound (in
    /// x-units) on the distance to the nearest interval boundary: lift margin
    /// divided by max |f'|.
    branch_ref branch_of(double x) const {
        double rel = lift(wrap_unit(x)) - lift(0.0); // in [0, d)
        int b = std::clamp(static_cast<int>(std::floor(rel)), 0, degree_ - 1);
        double margin = std::min(rel - b, b + 1.0 - rel);
        return {b, margin / max_deriv_};
    }

    bool is_linear() const { return terms_.empty(); }

private:
    /// Monotone solve of lift(p) = target via Newton with a bisection safeguard.
    double solve_lift(double target) const {
        double lo = (target - lift(0.0) - 2.0 * amp_sum_) / degree_;
        double hi = (target - lift(0.0) + 2.0 * amp_sum_) / degree_;
        double p = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            double r = lift(p) - target;
            if (std::fabs(r) < 1e-14) break;
            if (r > 0)
                hi = p;
            else
                lo = p;
            double step = r / lift_deriv(p);
            double q = p - step;
            p = (q > lo && q < hi) ? q : 0.5 * (lo + hi);
        }
        return p;
    }

    int degree_;
    std::vector<trig_term> terms_;
    double min_deriv_{2.0};
    double max_deriv_{2.0};
    double amp_sum_{0.0};
    double second_deriv_ub_{0.0};
};

// ---------------------------------------------------------------------------
// Hyperbolic torus maps
// ---------------------------------------------------------------------------

/// One vector term amp * sin(2*pi*(kx*x + ky*y) + phase) of a torus perturbation.
struct torus_term {
    vec2 amp{0.0, 0.0};
    int kx{0};
    int ky{1};
    double phase{0.0};
};

struct eigen_split {
    double mu_u{0.0}; // |mu_u| > 1
    double mu_s{0.0}; // |mu_s| < 1
    vec2 vu{1.0, 0.0};
    vec2 vs{0.0, 1.0};
};

class torus_map {
public:
    torus_map() : torus_map(2, 1, 1, 1, {}) {}

    torus_map(int a, int b, int c, int d, std::vector<torus_term> terms)
        : ia_(a), ib_(b), ic_(c), id_(d), terms_(std::move(terms)) {
        long det = static_cast<long>(ia_) * id_ - static_cast<long>(ib_) * ic_;
        require(det == 1 || det == -1, errc::not_hyperbolic, "linear part must have det = +-1");
        A_ = {static_cast<double>(ia_), static_cast<double>(ib_), static_cast<double>(ic_),
              static_cast<double>(id_)};
        split_ = compute_split();
        pert_c0_ = pert_c1_ = pert_c2_ = 0.0;
        for (const auto& t : terms_) {
            double knorm = std::hypot(static_cast<double>(t.kx), static_cast<double>(t.ky));
            require(knorm > 0, errc::parameter_out_of_range, "zero wave vector");
            double an = t.amp.norm();
            pert_c0_ += an;
            pert_c1_ += an * two_pi * knorm;
            pert_c2_ += an * two_pi * two_pi * knorm * knorm;
        }
        // Keep the perturbation small against the spectral gap so cone fields
        // around the linear splitting survive (checked quantitatively by the
        // shadowing module's cone certificate).
        require(pert_c1_ < 0.5 * (1.0 - std::fabs(split_.mu_s)), errc::not_hyperbolic,
                "perturbation C1 norm too large for the declared splitting");
    }

    const mat2& linear() const { return A_; }
    const std::vector<torus_term>& terms() const { return terms_; }
    const eigen_split& split() const { return split_; }

    vec2 perturbation(vec2 v) const {
        vec2 p{0.0, 0.0};
        for (const auto& t : terms_) {
            double s = std::sin(two_pi * (t.kx * v.x + t.ky * v.y) + t.phase);
            p = p + t.amp * s;
        }
        return p;
    }

    point eval(const point& p) const {
        vec2 v = p.as_vec();
        vec2 w = A_.apply(v) + perturbation(v);
        return point::on_torus(w);
    }

    mat2 derivative(const point& p) const {
        mat2 J = A_;
        for (const auto& t : terms_) {
            double c = two_pi * std::cos(two_pi * (t.kx * p.x + t.ky * p.y) + t.phase);
            J.a += t.amp.x * c * t.kx;
            J.b += t.amp.x * c * t.ky;
            J.c += t.amp.y * c * t.kx;
            J.d += t.amp.y * c * t.ky;
        }
        return J;
    }

    /// Newton-solved inverse on the torus. Converges for all perturbations the
    /// constructor admits; residual < 1e-13.
    point invert(const point& y) const {
        mat2 Ainv = A_.inverse();
        vec2 z = Ainv.apply(y.as_vec());
        for (int it = 0; it < 64; ++it) {
            point zp = point::on_torus(z);
            vec2 r = torus_diff(eval(zp), y);
            if (r.norm() < 1e-13) return point::on_torus(z);
            vec2 step = derivative(zp).inverse().apply(r);
            z = z - step;
        }
        fail(errc::non_convergence, "torus inverse Newton exhausted its iteration cap");
    }

    /// Certified upper bound on sup ||Df||.
    double max_deriv() const { return A_.opnorm() + pert_c1_; }
    double pert_c0_norm() const { return pert_c0_; }
    double pert_c1_norm() const { return pert_c1_; }
    double second_deriv_bound() const { return pert_c2_; }
    bool is_linear() const { return terms_.empty(); }

    /// The classical cat map [[2,1],[1,1]].
    static torus_map cat(std::vector<torus_term> terms = {}) {
        return torus_map(2, 1, 1, 1, std::move(terms));
    }

private:
    eigen_split compute_split() const {
        double tr = A_.a + A_.d;
        double det = A_.det();
        double disc = tr * tr - 4.0 * det;
        require(disc > 1e-12, errc::not_hyperbolic, "linear part has no real split spectrum");
        double s = std::sqrt(disc);
        double m1 = 0.5 * (tr + s), m2 = 0.5 * (tr - s);
        eigen_split e;
        if (std::fabs(m1) < std::fabs(m2)) std::swap(m1, m2);
        e.mu_u = m1;
        e.mu_s = m2;
        require(std::fabs(e.mu_u) > 1.0 + 1e-9 && std::fabs(e.mu_s) < 1.0 - 1e-9,
                errc::not_hyperbolic, "eigenvalues not split across the unit circle");
        auto eigvec = [&](double mu) -> vec2 {
            // (A - mu I) v = 0; pick the better-conditioned row.
            vec2 r1{A_.a - mu, A_.b}, r2{A_.c, A_.d - mu};
            vec2 v = (r1.norm() > r2.norm()) ? vec2{-r1.y, r1.x} : vec2{-r2.y, r2.x};
            double n = v.norm();
            return {v.x / n, v.y / n};
        };
        e.vu = eigvec(e.mu_u);
        e.vs = eigvec(e.mu_s);
        return e;
    }

    int ia_, ib_, ic_, id_;
    mat2 A_;
    std::vector<torus_term> terms_;
    eigen_split split_;
    double pert_c0_{0.0}, pert_c1_{0.0}, pert_c2_{0.0};
};

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// One term amp * cos(2*pi*(kx*x + ky*y) + phase); ky ignored on the circle.
struct obs_term {
    double amp{1.0};
    int kx{1};
    int ky{0};
    double phase{0.0};
};

/// Real observable on the phase space: a trigonometric polynomial plus
/// constant, or the piecewise-smooth preset d(x, 0). All presets are
/// 1-Hölder (Lipschitz); the constant is closed-form so the mean under
/// the reference measure is exact.
struct observable {
    enum class kind { trig, dist_to_zero };

    phase_space space{phase_space::circle};
    kind form{kind::trig};
    std::vector<obs_term> terms{{1.0, 1, 0, 0.0}};
    double constant{0.0};

    double eval(const point& p) const {
        if (form == kind::dist_to_zero) return dist(p, point{p.space, 0.0, 0.0}) + constant;
        double v = constant;
        for (const auto& t : terms) v += t.amp * std::cos(two_pi * (t.kx * p.x + t.ky * p.y) + t.phase);
        return v;
    }

    double eval_circle(double x) const {
        if (form == kind::dist_to_zero) return circle_dist(x, 0.0) + constant;
        double v = constant;
        for (const auto& t : terms) v += t.amp * std::cos(two_pi * t.kx * x + t.phase);
        return v;
    }

    double holder_exponent() const { return 1.0; }

    /// Certified Hölder (= Lipschitz) constant.
    double holder_constant() const {
        if (form == kind::dist_to_zero) return 1.0;
        double c = 0.0;
        for (const auto& t : terms)
            c += std::fabs(t.amp) * two_pi * std::hypot(static_cast<double>(t.kx), static_cast<double>(t.ky));
        return c;
    }

    double sup_bound() const {
        if (form == kind::dist_to_zero)
            return constant + (space == phase_space::circle ? 0.5 : std::sqrt(0.5));
        double s = std::fabs(constant);
        for (const auto& t : terms) s += std::fabs(t.amp);
        return s;
    }

    /// Mean under the reference (Lebesgue) measure; exact for both forms.
    double reference_mean() const {
        if (form == kind::dist_to_zero)
            return constant + (space == phase_space::circle ? 0.25 : 0.38259785823210635);
        return constant; // nonconstant cosines integrate to zero
    }

    bool mean_zero() const { return std::fabs(reference_mean()) < 1e-15; }

    static observable cos1(phase_space sp = phase_space::circle) {
        observable o;
        o.space = sp;
        o.terms = {{1.0, 1, 0, 0.0}};
        return o;
    }

    /// Exact coboundary psi∘f - psi for psi = cos(2*pi*x) and f = doubling:
    /// cos(4*pi*x) - cos(2*pi*x). Green-Kubo variance is exactly zero.
    static observable doubling_coboundary() {
        observable o;
        o.terms = {{1.0, 2, 0, 0.0}, {-1.0, 1, 0, 0.0}};
        return o;
    }
};

// ---------------------------------------------------------------------------
// Map distances (grid-certified)
// ---------------------------------------------------------------------------

/// Grid-estimated distance with a Lipschitz gap certificate:
/// lower = max over grid, upper = lower + L_gap * h / 2.
struct dist_bound {
    double lower{0.0};
    double upper{0.0};
    int grid{0};
};

namespace detail {

/// Lipschitz constant of x -> dist(lift_f(x) - lift_g(x), Z): the slope gap of
/// the degrees plus the full wobble of both trig parts. Much sharper than
/// M_f + M_g for equal-degree maps.
inline double diff_lipschitz(const circle_map& f, const circle_map& g) {
    double lip = std::fabs(static_cast<double>(f.degree() - g.degree()));
    for (const auto& t : f.terms()) lip += two_pi * t.k * std::fabs(t.amp);
    for (const auto& t : g.terms()) lip += two_pi * t.k * std::fabs(t.amp);
    return lip;
}

} // namespace detail

inline dist_bound c0_distance(const circle_map& f, const circle_map& g, int grid = 4096) {
    require(grid >= 8, errc::grid_too_coarse, "need >= 8 grid points");
    double m = 0.0;
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        m = std::max(m, circle_dist(f.eval(x), g.eval(x)));
    }
    double lip = detail::diff_lipschitz(f, g);
    return {m, m + 0.5 * lip / grid, grid};
}

inline dist_bound c1_distance(const circle_map& f, const circle_map& g, int grid = 4096) {
    dist_bound d0 = c0_distance(f, g, grid);
    double m = 0.0;
    for (int i = 0; i < grid; ++i) {
        double x = static_cast<double>(i) / grid;
        m = std::max(m, std::fabs(f.lift_deriv(x) - g.lift_deriv(x)));
    }
    double lip = f.second_deriv_bound() + g.second_deriv_bound();
    dist_bound d1{m, m + 0.5 * lip / grid, grid};
    return {std::max(d0.lower, d1.lower), std::max(d0.upper, d1.upper), grid};
}

inline dist_bound c0_distance(const torus_map& f, const torus_map& g, int grid = 128) {
    require(grid >= 8, errc::grid_too_coarse, "need >= 8 grid points per axis");
    double m = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            point p = point::on_torus(static_cast<double>(i) / grid, static_cast<double>(j) / grid);
            m = std::max(m, dist(f.eval(p), g.eval(p)));
        }
    // Lipschitz constant of the pointwise distance field: linear-part gap plus
    // both perturbation wobbles (zero gap when the linear models coincide).
    const mat2 &A = f.linear(), &B = g.linear();
    mat2 gap{A.a - B.a, A.b - B.b, A.c - B.c, A.d - B.d};
    double lip = gap.opnorm() + f.pert_c1_norm() + g.pert_c1_norm();
    return {m, m + 0.5 * lip * std::sqrt(2.0) / grid, grid};
}

inline dist_bound c1_distance(const torus_map& f, const torus_map& g, int grid = 128) {
    dist_bound d0 = c0_distance(f, g, grid);
    double m = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            point p = point::on_torus(static_cast<double>(i) / grid, static_cast<double>(j) / grid);
            mat2 df = f.derivative(p), dg = g.derivative(p);
            mat2 gap{df.a - dg.a, df.b - dg.b, df.c - dg.c, df.d - dg.d};
            m = std::max(m, gap.opnorm());
        }
    double lip = f.second_deriv_bound() + g.second_deriv_bound();
    dist_bound d1{m, m + 0.5 * lip * std::sqrt(2.0) / grid, grid};
    return {std::max(d0.lower, d1.lower), std::max(d0.upper, d1.upper), grid};
}

} // namespace seqdyn
