#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "seqdyn/conjugacy.hpp"
#include "seqdyn/core.hpp"
#include "seqdyn/digits.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Birkhoff averages
// ---------------------------------------------------------------------------

/// Running Birkhoff averages (1/m) sum_{j<m} phi(F_j(x)) for m = 1..n.
inline std::vector<double> birkhoff_series(const map_seq& F, const observable& phi,
                                           point x, long n) {
    require(n >= 1, errc::parameter_out_of_range, "birkhoff_series: n must be positive");
    std::vector<double> avg(static_cast<std::size_t>(n));
    double acc = 0.0;
    point z = x;
    for (long m = 0; m < n; ++m) {
        acc += phi.eval(z);
        avg[static_cast<std::size_t>(m)] = acc / static_cast<double>(m + 1);
        z = F.step(m, z);
    }
    return avg;
}

/// Running averages of a circle observable along a digit tape.  The tape's
/// windows are the doubling orbit itself, so this path has no roundoff drift
/// and no dyadic collapse at any length.
inline std::vector<double> birkhoff_series(const bit_tape& tape, const observable& phi,
                                           long n) {
    require(phi.space == phase_space::circle, errc::domain_error,
            "tape averages need a circle observable");
    require(n >= 1 && n <= tape.horizon(), errc::parameter_out_of_range,
            "birkhoff_series: trace exceeds tape horizon");
    std::vector<double> avg(static_cast<std::size_t>(n));
    double acc = 0.0;
    window_cursor cur(tape);
    for (long m = 0; m < n; ++m) {
        acc += phi.eval_circle(cur.value());
        avg[static_cast<std::size_t>(m)] = acc / static_cast<double>(m + 1);
        cur.advance();
    }
    return avg;
}

// ---------------------------------------------------------------------------
// Empirical measures
// ---------------------------------------------------------------------------

/// How a sample cloud was produced; carried along so downstream reports can
/// say what they compared.
enum class measure_origin { orbit, pushforward, mixture, reference };

inline const char* measure_origin_name(measure_origin o) {
    switch (o) {
        case measure_origin::orbit: return "orbit";
        case measure_origin::pushforward: return "pushforward";
        case measure_origin::mixture: return "mixture";
        case measure_origin::reference: return "reference";
    }
    return "?";
}

/// Uniformly weighted sample cloud standing in for a probability measure.
struct empirical_measure {
    phase_space space = phase_space::circle;
    measure_origin origin = measure_origin::orbit;
    std::vector<point> samples;

    std::size_t size() const { return samples.size(); }

    /// Histogram with `bins` cells per coordinate; masses sum to 1.
    std::vector<double> histogram(int bins) const {
        require(bins >= 1, errc::parameter_out_of_range, "histogram needs bins >= 1");
        require(!samples.empty(), errc::parameter_out_of_range, "histogram of empty cloud");
        std::size_t cells = static_cast<std::size_t>(bins);
        if (space == phase_space::torus) cells *= static_cast<std::size_t>(bins);
        std::vector<double> mass(cells, 0.0);
        const double w = 1.0 / static_cast<double>(samples.size());
        for (const point& p : samples) {
            int i = std::min(bins - 1, static_cast<int>(wrap_unit(p.x) * bins));
            if (space == phase_space::circle) {
                mass[static_cast<std::size_t>(i)] += w;
            } else {
                int j = std::min(bins - 1, static_cast<int>(wrap_unit(p.y) * bins));
                mass[static_cast<std::size_t>(i * bins + j)] += w;
            }
        }
        return mass;
    }
};

/// Empirical measure of the orbit segment x, F_1(x), ..., F_{n-1}(x).
inline empirical_measure orbit_measure(const map_seq& F, point x, long n) {
    require(n >= 1, errc::parameter_out_of_range, "orbit_measure: n must be positive");
    empirical_measure mu;
    mu.space = F.space();
    mu.origin = measure_origin::orbit;
    mu.samples.reserve(static_cast<std::size_t>(n));
    point z = x;
    for (long m = 0; m < n; ++m) {
        mu.samples.push_back(z);
        z = F.step(m, z);
    }
    return mu;
}

/// Orbit measure of a doubling trajectory read off a digit tape.
inline empirical_measure orbit_measure(const bit_tape& tape, long n) {
    require(n >= 1 && n <= tape.horizon(), errc::parameter_out_of_range,
            "orbit_measure: trace exceeds tape horizon");
    empirical_measure mu;
    mu.space = phase_space::circle;
    mu.origin = measure_origin::orbit;
    mu.samples.reserve(static_cast<std::size_t>(n));
    window_cursor cur(tape);
    for (long m = 0; m < n; ++m) {
        mu.samples.push_back(point::on_circle(cur.value()));
        cur.advance();
    }
    return mu;
}

/// Stratified stand-in for Lebesgue: midpoints of n equal cells (and their
/// products on the torus).  Deterministic, so comparisons against it carry no
/// sampling noise of their own.
inline empirical_measure reference_measure(phase_space space, long n) {
    require(n >= 1, errc::parameter_out_of_range, "reference_measure: n must be positive");
    empirical_measure mu;
    mu.space = space;
    mu.origin = measure_origin::reference;
    if (space == phase_space::circle) {
        mu.samples.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            mu.samples.push_back(point::on_circle((i + 0.5) / static_cast<double>(n)));
    } else {
        long side = static_cast<long>(std::lround(std::sqrt(static_cast<double>(n))));
        require(side * side == n, errc::parameter_out_of_range,
                "torus reference measure needs a square sample count");
        mu.samples.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < side; ++i)
            for (long j = 0; j < side; ++j)
                mu.samples.push_back(point::on_torus((i + 0.5) / static_cast<double>(side),
                                                     (j + 0.5) / static_cast<double>(side)));
    }
    return mu;
}

/// Image of a sample cloud under an interpolated conjugacy.
inline empirical_measure pushforward(const conjugacy_sample& h, const empirical_measure& mu) {
    require(h.space() == mu.space, errc::domain_error,
            "pushforward: conjugacy and measure live on different spaces");
    empirical_measure out;
    out.space = mu.space;
    out.origin = measure_origin::pushforward;
    out.samples.reserve(mu.samples.size());
    for (const point& p : mu.samples) out.samples.push_back(h.eval(p));
    return out;
}

/// Uniform mixture (1/N) sum_i (h_i)_* mu.
inline empirical_measure periodic_limit_measure(const std::vector<conjugacy_sample>& h_list,
                                                const empirical_measure& mu) {
    require(!h_list.empty(), errc::parameter_out_of_range,
            "periodic_limit_measure: empty conjugacy list");
    empirical_measure out;
    out.space = mu.space;
    out.origin = measure_origin::mixture;
    out.samples.reserve(h_list.size() * mu.samples.size());
    for (const conjugacy_sample& h : h_list) {
        require(h.space() == mu.space, errc::domain_error,
                "periodic_limit_measure: space mismatch");
        for (const point& p : mu.samples) out.samples.push_back(h.eval(p));
    }
    return out;
}

namespace detail {

/// Signed CDF-difference extremes of two sorted circle sample sets, evaluated
/// at the jump points of either.  Returns (inf D, sup D) for D = F_mu - F_nu
/// on one fixed cut of the circle.
inline std::pair<double, double> cdf_gap_range(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    const double wa = 1.0 / static_cast<double>(a.size());
    const double wb = 1.0 / static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0, lo = 0.0, hi = 0.0;
    while (i < a.size() || j < b.size()) {
        double xa = i < a.size() ? a[i] : 2.0;
        double xb = j < b.size() ? b[j] : 2.0;
        if (xa <= xb) {
            while (i < a.size() && a[i] == xa) { d += wa; ++i; }
        }
        if (xb <= xa) {
            while (j < b.size() && b[j] == xb) { d -= wb; ++j; }
        }
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi};
}

inline std::vector<double> sorted_coords(const empirical_measure& mu, bool second) {
    std::vector<double> v;
    v.reserve(mu.samples.size());
    for (const point& p : mu.samples) v.push_back(wrap_unit(second ? p.y : p.x));
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace detail

/// Kolmogorov-Smirnov-type distance between sample clouds.  On the circle the
/// statistic is (sup D - inf D)/2 for the CDF difference D on a single cut;
/// shifting the cut moves D by a constant, so this value is cut-invariant and
/// agrees with the smallest sup-gap over all cut choices.  On the torus we
/// take the larger of the two marginal distances.
inline double measure_distance(const empirical_measure& mu, const empirical_measure& nu) {
    require(mu.space == nu.space, errc::domain_error,
            "measure_distance: clouds live on different spaces");
    require(!mu.samples.empty() && !nu.samples.empty(), errc::parameter_out_of_range,
            "measure_distance: empty cloud");
    auto [lo0, hi0] = detail::cdf_gap_range(detail::sorted_coords(mu, false),
                                            detail::sorted_coords(nu, false));
    double d = 0.5 * (hi0 - lo0);
    if (mu.space == phase_space::torus) {
        auto [lo1, hi1] = detail::cdf_gap_range(detail::sorted_coords(mu, true),
                                                detail::sorted_coords(nu, true));
        d = std::max(d, 0.5 * (hi1 - lo1));
    }
    return d;
}

/// Distance between a sample cloud and the mixture (1/n) sum_{j<n} (f_j)_* of
/// itself, i.e. how far the cloud is from being invariant on average over the
/// first n maps of the sequence.
inline double average_invariance_defect(const map_seq& F, const empirical_measure& mu,
                                        long n) {
    require(n >= 1, errc::parameter_out_of_range,
            "average_invariance_defect: n must be positive");
    empirical_measure mix;
    mix.space = mu.space;
    mix.origin = measure_origin::mixture;
    mix.samples.reserve(static_cast<std::size_t>(n) * mu.samples.size());
    for (long j = 0; j < n; ++j)
        for (const point& p : mu.samples) mix.samples.push_back(F.step(j, p));
    return measure_distance(mu, mix);
}

// ---------------------------------------------------------------------------
// A point with divergent Birkhoff averages
// ---------------------------------------------------------------------------

/// Digit-block itinerary whose running averages oscillate between the values
/// of the observable on the fixed point 0 and on the period-2 orbit
/// {1/3, 2/3}: each block is 20x longer than everything before it, so the
/// average at a block end is within 1/21 of the fresh block's own average,
/// and the two subsequence limits stay apart forever.
struct irregular_probe {
    std::vector<digit_block> blocks;
    bit_tape tape;
    long trace_len = 0;
    long settle_time = 0;           ///< extremes are taken over m >= settle_time
    double fixed_avg = 0.0;         ///< phi at the fixed point 0
    double cycle_avg = 0.0;         ///< phi averaged over {1/3, 2/3}
    double limsup = 0.0;            ///< max running average past settle_time
    double liminf = 0.0;            ///< min running average past settle_time
    std::vector<long> checkpoints;  ///< block-end times within the trace
    std::vector<double> checkpoint_avg;
    std::vector<std::pair<long, double>> trace;  ///< down-sampled running averages
};

inline irregular_probe irregular_point(const circle_map& f, const observable& phi,
                                       long trace_len, long settle_time = 1000) {
    require(f.is_linear() && f.degree() == 2, errc::domain_error,
            "irregular_point: itinerary digits need the plain doubling map");
    require(phi.space == phase_space::circle, errc::domain_error,
            "irregular_point: need a circle observable");
    require(trace_len > settle_time && settle_time >= 1, errc::parameter_out_of_range,
            "irregular_point: trace too short for the settle window");

    irregular_probe probe;
    probe.trace_len = trace_len;
    probe.settle_time = settle_time;
    probe.fixed_avg = phi.eval_circle(0.0);
    probe.cycle_avg = 0.5 * (phi.eval_circle(1.0 / 3.0) + phi.eval_circle(2.0 / 3.0));
    require(std::abs(probe.fixed_avg - probe.cycle_avg) > 1e-3, errc::degenerate_observable,
            "irregular_point: observable does not separate the two periodic averages");

    // Slack past the trace covers both the 53-bit window overhang and the
    // pullback depth of any later transported replay.
    probe.blocks = irregular_digit_blocks(trace_len + 160);
    probe.tape = bit_tape::from_blocks(probe.blocks);
    std::vector<long> ends = block_end_times(probe.blocks);

    window_cursor cur(probe.tape);
    double acc = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const long stride = std::max<long>(1, trace_len / 4096);
    std::size_t next_end = 0;
    for (long m = 1; m <= trace_len; ++m) {
        acc += phi.eval_circle(cur.value());
        cur.advance();
        const double avg = acc / static_cast<double>(m);
        if (m >= settle_time) {
            lo = std::min(lo, avg);
            hi = std::max(hi, avg);
        }
        if (m % stride == 0 || m == trace_len)
            probe.trace.emplace_back(m, avg);
        if (next_end < ends.size() && m == ends[next_end]) {
            probe.checkpoints.push_back(m);
            probe.checkpoint_avg.push_back(avg);
            ++next_end;
        }
    }
    probe.limsup = hi;
    probe.liminf = lo;
    return probe;
}

/// F-side replay of an irregular trace.  With h_j the conjugacies of the
/// shifted sequences, the F-orbit of x = h_0(z) is exactly h_j(f^j z), so the
/// F-side Birkhoff sums can be evaluated by pulling each tape window through
/// the branch chain of F^{(j)} -- no forward float orbit is ever formed.  The
/// budget is the running mean of |phi(h_j(f^j z)) - phi(f^j z)|, which bounds
/// the gap between the F-side and f-side averages term by term.
struct transported_trace {
    long trace_len = 0;
    long settle_time = 0;
    int depth = 0;
    double limsup = 0.0;
    double liminf = 0.0;
    double max_budget = 0.0;        ///< max over m >= settle_time of the mean gap
    double final_budget = 0.0;      ///< budget at m = trace_len
    std::vector<std::pair<long, double>> trace;
};

inline transported_trace transported_averages(const map_seq& F, const irregular_probe& probe,
                                              const observable& phi, int depth = 25) {
    require(F.space() == phase_space::circle, errc::domain_error,
            "transported_averages: circle sequences only");
    require(depth >= 1, errc::parameter_out_of_range, "transported_averages: bad depth");
    require(probe.trace_len + depth <= probe.tape.horizon(), errc::parameter_out_of_range,
            "transported_averages: tape too short for pullback depth");

    const long n = probe.trace_len;
    // Window values w_j = f^j(z) for j < n + depth, read once.
    std::vector<double> w(static_cast<std::size_t>(n + depth));
    {
        window_cursor cur(probe.tape);
        for (long j = 0; j < n + depth; ++j) {
            w[static_cast<std::size_t>(j)] = cur.value();
            cur.advance();
        }
    }

    transported_trace out;
    out.trace_len = n;
    out.settle_time = probe.settle_time;
    out.depth = depth;

    // Rolling window of maps f^F_j ... f^F_{j+depth-1}; the sequence classes
    // hand out copies, so keep a reusable ring instead of re-slicing per j.
    std::vector<circle_map> ring;
    ring.reserve(static_cast<std::size_t>(depth));
    for (long j = 0; j < depth; ++j) ring.push_back(F.circle_at(j));

    double acc = 0.0, gap_acc = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const long stride = std::max<long>(1, n / 4096);
    for (long j = 0; j < n; ++j) {
        // Pull w_{j+depth} back through maps j+depth-1, ..., j anchored at the
        // tape windows; the result is h_j(f^j z) up to the usual truncation.
        double z = w[static_cast<std::size_t>(j + depth)];
        for (long i = depth - 1; i >= 0; --i) {
            const circle_map& m = ring[static_cast<std::size_t>((j + i) % depth)];
            z = m.inverse_near(z, w[static_cast<std::size_t>(j + i)]);
        }
        const double val = phi.eval_circle(z);
        acc += val;
        gap_acc += std::abs(val - phi.eval_circle(w[static_cast<std::size_t>(j)]));
        const long m = j + 1;
        const double avg = acc / static_cast<double>(m);
        if (m >= probe.settle_time) {
            lo = std::min(lo, avg);
            hi = std::max(hi, avg);
            out.max_budget = std::max(out.max_budget, gap_acc / static_cast<double>(m));
        }
        if (m % stride == 0 || m == n) out.trace.emplace_back(m, avg);
        // Recycle the ring slot that just fell out of the pullback window.
        ring[static_cast<std::size_t>(j % depth)] = F.circle_at(j + depth);
    }
    out.limsup = hi;
    out.liminf = lo;
    out.final_budget = gap_acc / static_cast<double>(n);
    return out;
}

} // namespace seqdyn
