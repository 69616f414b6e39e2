#pragma once

// Sequences of maps F = {f_n} with finitely describable representations:
//
//   constant        f_n = f
//   periodic        f_{n+N} = f_n
//   convergent-tail f_n = limit + s(n) * psi  (declared decay law, optional
//                   explicit leading maps), one-sided (n >= 0)
//
// The representation is what makes |||F - G||| = sup_n d(f_n, g_n) computable:
// the sup is probed exactly on the explicit part and bounded through the decay
// law on the tail. Shifted sequences F^(k) = {f_{n+k}} share the same
// representation with an index offset.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "seqdyn/core.hpp"
#include "seqdyn/maps.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Decay schedules
// ---------------------------------------------------------------------------

/// Nonincreasing decay law s(n): geometric C*r^n or power-law C*max(n,1)^-p.
struct decay_schedule {
    enum class kind { geometric, power };

    kind form{kind::geometric};
    double C{1.0};
    double ratio{0.5};    // geometric
    double exponent{1.0}; // power

    static decay_schedule geometric(double C, double ratio) {
        require(C >= 0 && ratio > 0 && ratio < 1, errc::parameter_out_of_range,
                "geometric schedule needs C >= 0, 0 < ratio < 1");
        return {kind::geometric, C, ratio, 0.0};
    }

    static decay_schedule power(double C, double exponent) {
        require(C >= 0 && exponent > 0, errc::parameter_out_of_range,
                "power schedule needs C >= 0, exponent > 0");
        return {kind::power, C, 0.5, exponent};
    }

    /// The ASIP-admissible rate a_j = C * j^{-(1/2+eps)/alpha}.
    static decay_schedule asip_rate(double C, double eps, double alpha) {
        require(eps > 0 && eps < 0.5, errc::parameter_out_of_range, "need 0 < eps < 1/2");
        require(alpha > 0 && alpha <= 1, errc::parameter_out_of_range, "need 0 < alpha <= 1");
        return power(C, (0.5 + eps) / alpha);
    }

    double at(long n) const {
        if (form == kind::geometric) return C * std::pow(ratio, static_cast<double>(n));
        return C * std::pow(static_cast<double>(std::max<long>(n, 1)), -exponent);
    }
};

// ---------------------------------------------------------------------------
// Map sequences
// ---------------------------------------------------------------------------

class map_seq {
public:
    enum class kind { constant, periodic, tail };

    // -- constructors -------------------------------------------------------

    static map_seq constant(circle_map f) {
        map_seq s(phase_space::circle, kind::constant);
        s.circle_members_ = {std::move(f)};
        s.finish_rates();
        return s;
    }

    static map_seq constant(torus_map f) {
        map_seq s(phase_space::torus, kind::constant);
        s.torus_members_ = {std::move(f)};
        s.finish_rates();
        return s;
    }

    static map_seq periodic(std::vector<circle_map> fs) {
        require(!fs.empty(), errc::parameter_out_of_range, "empty period");
        map_seq s(phase_space::circle, kind::periodic);
        s.circle_members_ = std::move(fs);
        s.finish_rates();
        return s;
    }

    static map_seq periodic(std::vector<torus_map> fs) {
        require(!fs.empty(), errc::parameter_out_of_range, "empty period");
        map_seq s(phase_space::torus, kind::periodic);
        s.torus_members_ = std::move(fs);
        s.finish_rates();
        return s;
    }

    /// Convergent tail on the circle: f_n = limit lift + s(n) * psi, with psi a
    /// trig perturbation. a_n = s(n) * ||psi||_C1 (exact for single-term psi).
    static map_seq tail_circle(circle_map limit, std::vector<trig_term> psi, decay_schedule sched,
                               std::vector<circle_map> leading = {}) {
        map_seq s(phase_space::circle, kind::tail);
        s.circle_members_ = {std::move(limit)};
        s.circle_dir_ = std::move(psi);
        s.sched_ = sched;
        s.leading_circle_ = std::move(leading);
        double c0 = 0.0, c1 = 0.0;
        for (const auto& t : s.circle_dir_) {
            c0 += std::fabs(t.amp);
            c1 += std::fabs(t.amp) * two_pi * t.k;
        }
        s.dir_c0_ = c0;
        s.dir_c1_ = std::max(c0, c1);
        // Verify the declared law majorizes any explicit leading maps.
        for (std::size_t i = 0; i < s.leading_circle_.size(); ++i) {
            double a_i = s.sched_.at(static_cast<long>(i)) * s.dir_c1_;
            double d_i = c1_distance(s.leading_circle_[i], s.circle_members_[0], 2048).lower;
            require(d_i <= a_i * (1.0 + 1e-9) + 1e-12, errc::parameter_out_of_range,
                    "leading map " + std::to_string(i) + " violates the declared decay law");
        }
        s.finish_rates();
        return s;
    }

    /// Convergent tail on the torus: f_n = A v + pert_limit + s(n) * psi.
    static map_seq tail_torus(torus_map limit, std::vector<torus_term> psi, decay_schedule sched) {
        map_seq s(phase_space::torus, kind::tail);
        s.torus_members_ = {std::move(limit)};
        s.torus_dir_ = std::move(psi);
        s.sched_ = sched;
        double c0 = 0.0, c1 = 0.0;
        for (const auto& t : s.torus_dir_) {
            double knorm = std::hypot(static_cast<double>(t.kx), static_cast<double>(t.ky));
            c0 += t.amp.norm();
            c1 += t.amp.norm() * two_pi * knorm;
        }
        s.dir_c0_ = c0;
        s.dir_c1_ = std::max(c0, c1);
        s.finish_rates();
        return s;
    }

    // -- basic queries -------------------------------------------------------

    phase_space space() const { return space_; }
    kind form() const { return kind_; }
    long shift() const { return shift_; }
    int period() const {
        return kind_ == kind::periodic
                   ? static_cast<int>(space_ == phase_space::circle ? circle_members_.size()
                                                                    : torus_members_.size())
                   : 1;
    }

    /// Shifted sequence F^(k) = {f_{n+k}}; representation-preserving.
    map_seq shifted(long k) const {
        map_seq s = *this;
        s.shift_ += k;
        return s;
    }

    /// Two-sided sequences support compose at negative indices (invertible
    /// members, index set Z). Convergent tails are declared one-sided.
    bool two_sided() const { return space_ == phase_space::torus && kind_ != kind::tail; }

    // -- member access -------------------------------------------------------

    circle_map circle_at(long n) const {
        require(space_ == phase_space::circle, errc::domain_error, "not a circle sequence");
        long idx = resolve(n);
        if (kind_ == kind::constant) return circle_members_[0];
        if (kind_ == kind::periodic)
            return circle_members_[static_cast<std::size_t>(mod_index(idx, circle_members_.size()))];
        if (idx < static_cast<long>(leading_circle_.size()))
            return leading_circle_[static_cast<std::size_t>(idx)];
        return materialize_circle(idx);
    }

    torus_map torus_at(long n) const {
        require(space_ == phase_space::torus, errc::domain_error, "not a torus sequence");
        long idx = resolve(n);
        if (kind_ == kind::constant) return torus_members_[0];
        if (kind_ == kind::periodic)
            return torus_members_[static_cast<std::size_t>(mod_index(idx, torus_members_.size()))];
        return materialize_torus(idx);
    }

    /// Materialized window f_start, ..., f_{start+len-1}.
    std::vector<circle_map> circle_window(long start, int len) const {
        std::vector<circle_map> w;
        w.reserve(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) w.push_back(circle_at(start + i));
        return w;
    }

    std::vector<torus_map> torus_window(long start, int len) const {
        std::vector<torus_map> w;
        w.reserve(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) w.push_back(torus_at(start + i));
        return w;
    }

    // -- evaluation ----------------------------------------------------------

    /// f_n(x) without materializing a map object (hot path for long orbits).
    double circle_step(long n, double x) const {
        require(space_ == phase_space::circle, errc::domain_error, "not a circle sequence");
        long idx = resolve(n);
        if (kind_ == kind::tail && idx >= static_cast<long>(leading_circle_.size())) {
            const circle_map& f = circle_members_[0];
            double v = f.lift(x);
            double s = sched_.at(idx);
            for (const auto& t : circle_dir_) v += s * t.amp * std::sin(two_pi * t.k * x + t.phase);
            return wrap_unit(v);
        }
        if (kind_ == kind::constant) return circle_members_[0].eval(x);
        if (kind_ == kind::periodic)
            return circle_members_[static_cast<std::size_t>(mod_index(idx, circle_members_.size()))]
                .eval(x);
        return circle_at(n).eval(x);
    }

    point step(long n, const point& x) const {
        if (space_ == phase_space::circle) return point::on_circle(circle_step(n, x.x));
        if (kind_ == kind::constant) return torus_members_[0].eval(x);
        if (kind_ == kind::periodic)
            return torus_members_[static_cast<std::size_t>(
                                      mod_index(resolve(n), torus_members_.size()))]
                .eval(x);
        return torus_at(n).eval(x);
    }

    /// F_n(x) = f_{n-1} o ... o f_0 (x); F_0 = id. Negative n composes inverse
    /// maps in order F_{-n} = f_{-n}^{-1} o ... o f_{-1}^{-1}.
    point compose(long n, point x) const {
        if (n >= 0) {
            for (long j = 0; j < n; ++j) x = step(j, x);
            return x;
        }
        require(two_sided(), errc::negative_index,
                "negative composition index on a one-sided sequence");
        for (long j = -1; j >= n; --j) x = torus_at(j).invert(x);
        return x;
    }

    // -- uniform rates and decay ---------------------------------------------

    /// Uniform inverse-branch contraction bound sup_n lambda_n (circle).
    double lambda_sup() const {
        require(space_ == phase_space::circle, errc::domain_error, "not a circle sequence");
        return lambda_sup_;
    }

    /// Uniform derivative bound sup_n M_n.
    double deriv_sup() const { return deriv_sup_; }

    /// a_n = sup_{l >= n} ||f_l - limit||_C1 per the declared decay law.
    double tail_decay(long n) const {
        long idx = resolve(n);
        require(idx >= 0, errc::negative_index, "tail decay at negative index");
        if (kind_ == kind::constant) return 0.0;
        require(kind_ == kind::tail, errc::no_declared_limit,
                "sequence has no declared limit map");
        return sched_.at(idx) * dir_c1_;
    }

    /// The declared limit map (constant sequences are their own limit).
    circle_map circle_limit() const {
        require(space_ == phase_space::circle, errc::domain_error, "not a circle sequence");
        require(kind_ != kind::periodic, errc::no_declared_limit, "periodic sequence has no limit");
        return circle_members_[0];
    }

    torus_map torus_limit() const {
        require(space_ == phase_space::torus, errc::domain_error, "not a torus sequence");
        require(kind_ != kind::periodic, errc::no_declared_limit, "periodic sequence has no limit");
        return torus_members_[0];
    }

    const decay_schedule& schedule() const {
        require(kind_ == kind::tail, errc::no_declared_limit, "no decay schedule");
        return sched_;
    }

    std::size_t leading_count() const { return leading_circle_.size(); }

private:
    map_seq(phase_space sp, kind k) : space_(sp), kind_(k) {}

    long resolve(long n) const {
        long idx = n + shift_;
        if (kind_ == kind::tail)
            require(idx >= 0, errc::negative_index, "one-sided sequence indexed at " +
                                                        std::to_string(idx));
        return idx;
    }

    static long mod_index(long n, std::size_t period) {
        long p = static_cast<long>(period);
        long m = n % p;
        return m < 0 ? m + p : m;
    }

    circle_map materialize_circle(long idx) const {
        const circle_map& limit = circle_members_[0];
        double s = sched_.at(idx);
        std::vector<trig_term> terms = limit.terms();
        for (const auto& t : circle_dir_) terms.push_back({s * t.amp, t.k, t.phase});
        return circle_map(limit.degree(), std::move(terms));
    }

    torus_map materialize_torus(long idx) const {
        const torus_map& limit = torus_members_[0];
        double s = sched_.at(idx);
        std::vector<torus_term> terms = limit.terms();
        for (const auto& t : torus_dir_) terms.push_back({t.amp * s, t.kx, t.ky, t.phase});
        const mat2& A = limit.linear();
        return torus_map(static_cast<int>(A.a), static_cast<int>(A.b), static_cast<int>(A.c),
                         static_cast<int>(A.d), std::move(terms));
    }

    void finish_rates() {
        double lam = 0.0, M = 0.0;
        if (space_ == phase_space::circle) {
            for (const auto& f : circle_members_) {
                lam = std::max(lam, f.contraction());
                M = std::max(M, f.max_deriv());
            }
            for (const auto& f : leading_circle_) {
                lam = std::max(lam, f.contraction());
                M = std::max(M, f.max_deriv());
            }
            if (kind_ == kind::tail) {
                // Worst materialized member: the schedule is nonincreasing, so
                // the first index past the explicit leading block is extremal.
                // (Leading maps are validated by their own constructors; the
                // declared law may exceed what any admissible map can realize
                // at indices the leading block covers.)
                double s0 = sched_.at(static_cast<long>(leading_circle_.size()));
                double min_d = circle_members_[0].min_deriv() - s0 * dir_c1_;
                require(min_d > 1.0, errc::not_expanding,
                        "tail perturbation breaks uniform expansion at its largest amplitude");
                lam = std::max(lam, 1.0 / min_d);
                M = std::max(M, circle_members_[0].max_deriv() + s0 * dir_c1_);
            }
        } else {
            for (const auto& f : torus_members_) M = std::max(M, f.max_deriv());
            if (kind_ == kind::tail) {
                double s0 = sched_.at(0);
                // Validate the extremal member (largest perturbation) outright.
                (void)materialize_torus(0);
                M = std::max(M, torus_members_[0].max_deriv() + s0 * dir_c1_);
            }
            lam = 0.0;
        }
        lambda_sup_ = lam;
        deriv_sup_ = M;
    }

    phase_space space_;
    kind kind_;
    long shift_{0};
    std::vector<circle_map> circle_members_;
    std::vector<torus_map> torus_members_;
    std::vector<circle_map> leading_circle_;
    std::vector<trig_term> circle_dir_;
    std::vector<torus_term> torus_dir_;
    decay_schedule sched_{};
    double dir_c0_{0.0}, dir_c1_{0.0};
    double lambda_sup_{0.5}, deriv_sup_{2.0};
};

// ---------------------------------------------------------------------------
// Sequence distance |||F - G||| = sup_n d_{C^r}(f_n, g_n)
// ---------------------------------------------------------------------------

struct seq_dist_result {
    double lower{0.0}; // measured grid max over the probed indices (headline value)
    double upper{0.0}; // certified: probe upper bound + tail corridor
    int grid{0};
    int probe_len{0};
};

/// Sup over n of the grid-estimated C^order distance. The sup is exact over the
/// explicit/periodic part (probed index by index) and bounded through the decay
/// law past the probe horizon: d(f_n, g_n) <= d(f_inf, g_j) + a^F(n) [+ a^G(n)].
inline seq_dist_result seq_distance(const map_seq& F, const map_seq& G, int order, int grid = 2048) {
    require(F.space() == G.space(), errc::domain_error, "incompatible phase spaces");
    require(order == 0 || order == 1, errc::parameter_out_of_range, "order must be 0 or 1");

    auto pair_dist = [&](long nf, long ng) -> dist_bound {
        if (F.space() == phase_space::circle) {
            circle_map f = F.circle_at(nf), g = G.circle_at(ng);
            return order == 0 ? c0_distance(f, g, grid) : c1_distance(f, g, grid);
        }
        torus_map f = F.torus_at(nf), g = G.torus_at(ng);
        int tg = std::max(8, static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid)))));
        return order == 0 ? c0_distance(f, g, tg) : c1_distance(f, g, tg);
    };

    long pf = F.period(), pg = G.period();
    long lcm = std::lcm(pf, pg);
    require(lcm <= 256, errc::parameter_out_of_range, "combined period too large");

    bool tf = F.form() == map_seq::kind::tail;
    bool tg2 = G.form() == map_seq::kind::tail;
    long horizon = lcm;
    if (tf) horizon = std::max<long>(horizon, static_cast<long>(F.leading_count()) + 8);
    if (tg2) horizon = std::max<long>(horizon, static_cast<long>(G.leading_count()) + 8);
    horizon = std::max<long>(horizon, (tf || tg2) ? 16 : lcm);

    seq_dist_result r;
    r.grid = grid;
    r.probe_len = static_cast<int>(horizon);
    for (long n = 0; n < horizon; ++n) {
        dist_bound d = pair_dist(n, n);
        r.lower = std::max(r.lower, d.lower);
        r.upper = std::max(r.upper, d.upper);
    }
    if (tf || tg2) {
        // Tail corridor past the probe horizon: compare against the declared
        // limit maps, with the decay-law slack on each tail side.
        double aF = tf ? F.tail_decay(horizon) : 0.0;
        double aG = tg2 ? G.tail_decay(horizon) : 0.0;
        map_seq Fl = tf ? (F.space() == phase_space::circle
                               ? map_seq::constant(F.circle_limit())
                               : map_seq::constant(F.torus_limit()))
                        : F;
        map_seq Gl = tg2 ? (G.space() == phase_space::circle
                                ? map_seq::constant(G.circle_limit())
                                : map_seq::constant(G.torus_limit()))
                         : G;
        auto limit_dist = [&](long nf, long ng) -> dist_bound {
            if (F.space() == phase_space::circle) {
                circle_map f = Fl.circle_at(nf), g = Gl.circle_at(ng);
                return order == 0 ? c0_distance(f, g, grid) : c1_distance(f, g, grid);
            }
            torus_map f = Fl.torus_at(nf), g = Gl.torus_at(ng);
            int tgrid = std::max(8, static_cast<int>(std::lround(std::sqrt(static_cast<double>(grid)))));
            return order == 0 ? c0_distance(f, g, tgrid) : c1_distance(f, g, tgrid);
        };
        double core_lo = 0.0, core_up = 0.0;
        for (long j = 0; j < lcm; ++j) {
            dist_bound d = limit_dist(j, j);
            core_lo = std::max(core_lo, d.lower);
            core_up = std::max(core_up, d.upper);
        }
        r.lower = std::max(r.lower, core_lo - aF - aG);
        r.upper = std::max(r.upper, core_up + aF + aG);
    }
    return r;
}

} // namespace seqdyn
