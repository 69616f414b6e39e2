#pragma once

// Shared basics: phase-space points on S^1 = R/Z and T^2 = R^2/Z^2 with the
// quotient metric, typed errors, seeded RNG streams, and a deterministic
// parallel-for. Everything downstream assumes the conventions fixed here:
// coordinates live in [0,1), distances are minima over integer translates.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace seqdyn {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class errc {
    not_expanding,          // circle family fails min |f'| > 1
    not_hyperbolic,         // torus linear part fails |det|=1 / split-spectrum check
    non_convergence,        // Newton / fixed-point solver exhausted its iteration cap
    defect_too_large,       // pseudo-orbit defect outside the admissible range
    admissibility_violated, // precondition of a quantitative theorem not met
    no_declared_limit,      // sequence has no declared limit map / decay law
    negative_index,         // two-sided access to a one-sided sequence
    boundary_itinerary,     // orbit hits a branch boundary; itinerary not robust
    degenerate_observable,  // observable cannot distinguish the designed targets
    not_mean_zero,          // observable mean significantly nonzero where zero is required
    no_separation,          // expansiveness probe found a pair that never separates
    truncation_dominates,   // orbit too short: truncation term exceeds the requested tolerance
    grid_too_coarse,        // resolution precondition violated
    inequality_violated,    // a certified comparison inequality failed on measured data
    degenerate_variance,    // declared-zero variance contradicted by the measured ensemble
    parameter_out_of_range,
    domain_error,           // operation unsupported for this family/sequence kind
    config_parse,
    experiment_failure,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::not_expanding: return "not_expanding";
        case errc::not_hyperbolic: return "not_hyperbolic";
        case errc::non_convergence: return "non_convergence";
        case errc::defect_too_large: return "defect_too_large";
        case errc::admissibility_violated: return "admissibility_violated";
        case errc::no_declared_limit: return "no_declared_limit";
        case errc::negative_index: return "negative_index";
        case errc::boundary_itinerary: return "boundary_itinerary";
        case errc::degenerate_observable: return "degenerate_observable";
        case errc::not_mean_zero: return "not_mean_zero";
        case errc::no_separation: return "no_separation";
        case errc::truncation_dominates: return "truncation_dominates";
        case errc::grid_too_coarse: return "grid_too_coarse";
        case errc::inequality_violated: return "inequality_violated";
        case errc::degenerate_variance: return "degenerate_variance";
        case errc::parameter_out_of_range: return "parameter_out_of_range";
        case errc::domain_error: return "domain_error";
        case errc::config_parse: return "config_parse";
        case errc::experiment_failure: return "experiment_failure";
        case errc::io_error: return "io_error";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

// ---------------------------------------------------------------------------
// Quotient geometry
// ---------------------------------------------------------------------------

/// Map a real number to its representative in [0,1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    // floor can leave r == 1.0 when x is a tiny negative number.
    return r >= 1.0 ? r - 1.0 : r;
}

/// Signed displacement from b to a, wrapped to the nearest representative in (-1/2, 1/2].
inline double wrap_diff(double a, double b) {
    double d = a - b;
    d -= std::round(d);
    return d;
}

/// Distance on S^1 = R/Z; at most 1/2.
inline double circle_dist(double a, double b) { return std::fabs(wrap_diff(a, b)); }

enum class phase_space { circle, torus };

struct vec2 {
    double x{0.0}, y{0.0};

    vec2 operator+(vec2 o) const { return {x + o.x, y + o.y}; }
    vec2 operator-(vec2 o) const { return {x - o.x, y - o.y}; }
    vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline vec2 operator*(double s, vec2 v) { return v * s; }

struct mat2 {
    // Row-major: [a b; c d].
    double a{1.0}, b{0.0}, c{0.0}, d{1.0};

    vec2 apply(vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    mat2 mul(const mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    double det() const { return a * d - b * c; }
    mat2 inverse() const {
        double dt = det();
        require(std::fabs(dt) > 1e-14, errc::domain_error, "singular 2x2 matrix");
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
    /// Spectral (operator) norm.
    double opnorm() const {
        // Largest singular value of [a b; c d].
        double p = a * a + b * b + c * c + d * d;
        double q = std::hypot(a * a + b * b - c * c - d * d, 2.0 * (a * c + b * d));
        return std::sqrt(0.5 * (p + q));
    }
};

/// Point on S^1 (dim 1, coordinate x) or T^2 (dim 2, coordinates x,y), always in [0,1).
struct point {
    phase_space space{phase_space::circle};
    double x{0.0};
    double y{0.0};

    static point on_circle(double x0) { return {phase_space::circle, wrap_unit(x0), 0.0}; }
    static point on_torus(double x0, double y0) {
        return {phase_space::torus, wrap_unit(x0), wrap_unit(y0)};
    }
    static point on_torus(vec2 v) { return on_torus(v.x, v.y); }
    vec2 as_vec() const { return {x, y}; }
    int dim() const { return space == phase_space::circle ? 1 : 2; }
};

/// Quotient metric: wrap each coordinate to its nearest representative, Euclidean norm.
/// Bounded by 1/2 on S^1 and sqrt(2)/2 on T^2.
inline double dist(const point& p, const point& q) {
    require(p.space == q.space, errc::domain_error, "points on different phase spaces");
    if (p.space == phase_space::circle) return circle_dist(p.x, q.x);
    return std::hypot(wrap_diff(p.x, q.x), wrap_diff(p.y, q.y));
}

/// Nearest-representative displacement from q to p (torus).
inline vec2 torus_diff(const point& p, const point& q) {
    return {wrap_diff(p.x, q.x), wrap_diff(p.y, q.y)};
}

// ---------------------------------------------------------------------------
// Seeded RNG streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream addressed by (seed, id...). Two streams with different id
/// tuples are decorrelated regardless of how work is scheduled, which is what
/// makes every parallel experiment reproducible at any thread count.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
        std::uint64_t key = splitmix64(seed);
        for (std::uint64_t id : ids) key = splitmix64(key ^ (id + 0x632be59bd9b4e019ULL));
        gen_.seed(key);
    }

    std::uint64_t bits() { return gen_(); }

    /// Uniform double in [0,1) with 53 random bits.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform in the disc of radius r (rejection from the square; expected < 1.28 draws).
    vec2 disc(double r) {
        for (;;) {
            double ux = uniform(-1.0, 1.0), uy = uniform(-1.0, 1.0);
            if (ux * ux + uy * uy <= 1.0) return {r * ux, r * uy};
        }
    }

    double gaussian() {
        // Box-Muller; uses two fresh uniforms per call (no cached spare, keeps
        // the stream position a pure function of the call count).
        double u1 = u01(), u2 = u01();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Deterministic parallel-for
// ---------------------------------------------------------------------------

/// Run body(i) for i in [0,n). Each index owns its output slot, so the result
/// is identical for every worker count; `threads <= 1` runs inline.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (threads <= 0) threads = hw > 0 ? static_cast<int>(hw) : 1;
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                // Strided assignment: worker t handles t, t+nt, t+2nt, ...
                for (std::size_t i = t; i < n; i += nt) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

struct line_fit {
    double slope{0.0};
    double intercept{0.0};
    double residual_rms{0.0};
};

/// Ordinary least squares y ~ slope*x + intercept.
inline line_fit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, errc::parameter_out_of_range,
            "need >= 2 points for a line fit");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    require(std::fabs(denom) > 1e-30, errc::parameter_out_of_range, "degenerate abscissae");
    line_fit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (f.slope * xs[i] + f.intercept);
        ss += r * r;
    }
    f.residual_rms = std::sqrt(ss / n);
    return f;
}

} // namespace seqdyn
