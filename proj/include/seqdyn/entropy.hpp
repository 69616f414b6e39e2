#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "seqdyn/core.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"

namespace seqdyn {

namespace detail {

/// Orbit distance d_n = max_{j<n} d(F_j x, F_j y), tested against eps with
/// early exit.  The largest gap is normally at the latest step, so we scan
/// backwards: separated pairs cost one comparison.
inline bool circle_separated(const double* a, const double* b, int n, double eps) {
    for (int j = n - 1; j >= 0; --j)
        if (circle_dist(a[j], b[j]) >= eps) return true;
    return false;
}

inline bool torus_separated(const point* a, const point* b, int n, double eps) {
    for (int j = n - 1; j >= 0; --j)
        if (dist(a[j], b[j]) >= eps) return true;
    return false;
}

/// Greedy sweep over the circle grid in ascending order.  A candidate is kept
/// when it is (n,eps)-separated from every point kept so far; scanning the
/// kept list newest-first finds a rejecting neighbor quickly because the
/// sweep is spatially ordered.
inline long greedy_circle(const map_seq& F, int n, double eps, long grid) {
    std::vector<circle_map> w = F.circle_window(0, n - 1);
    std::vector<double> kept;   // flattened orbit rows of the kept points
    std::vector<double> buf(static_cast<std::size_t>(n));
    long count = 0;
    for (long i = 0; i < grid; ++i) {
        buf[0] = static_cast<double>(i) / static_cast<double>(grid);
        for (int j = 1; j < n; ++j)
            buf[static_cast<std::size_t>(j)] =
                w[static_cast<std::size_t>(j - 1)].eval(buf[static_cast<std::size_t>(j - 1)]);
        bool keep = true;
        for (long k = count - 1; k >= 0; --k) {
            if (!circle_separated(buf.data(), kept.data() + k * n, n, eps)) {
                keep = false;
                break;
            }
        }
        if (keep) {
            kept.insert(kept.end(), buf.begin(), buf.end());
            ++count;
        }
    }
    return count;
}

/// Greedy sweep over the torus grid (row-major).  Only points within eps at
/// step 0 can fail separation, so checks are confined to bucket cells within
/// eps of the candidate.  Cells are much finer than eps and are visited in
/// rings of growing Chebyshev radius: a rejecting neighbor sits very close in
/// the unstable direction, so rejected candidates (the vast majority) stop at
/// the innermost rings.
inline long greedy_torus(const map_seq& F, int n, double eps, long side) {
    std::vector<torus_map> w = F.torus_window(0, n - 1);
    const long cells = std::max<long>(3, static_cast<long>(std::floor(8.0 / eps)));
    const long reach = std::min(cells / 2,
                                static_cast<long>(std::ceil(eps * static_cast<double>(cells))) + 1);
    std::vector<std::vector<std::pair<long, long>>> rings(static_cast<std::size_t>(reach) + 1);
    for (long dy = -reach; dy <= reach; ++dy)
        for (long dx = -reach; dx <= reach; ++dx)
            rings[static_cast<std::size_t>(std::max(std::labs(dx), std::labs(dy)))]
                .emplace_back(dx, dy);

    std::vector<std::vector<long>> bucket(static_cast<std::size_t>(cells * cells));
    std::vector<point> kept;
    std::vector<point> ends;  // kept orbit endpoints, contiguous for the fast test
    std::vector<point> buf(static_cast<std::size_t>(n));
    long count = 0;
    for (long iy = 0; iy < side; ++iy) {
        for (long ix = 0; ix < side; ++ix) {
            buf[0] = point::on_torus(static_cast<double>(ix) / static_cast<double>(side),
                                     static_cast<double>(iy) / static_cast<double>(side));
            for (int j = 1; j < n; ++j)
                buf[static_cast<std::size_t>(j)] =
                    w[static_cast<std::size_t>(j - 1)].eval(buf[static_cast<std::size_t>(j - 1)]);
            const point& tip = buf[static_cast<std::size_t>(n - 1)];
            const long cx = std::min(cells - 1, static_cast<long>(buf[0].x * cells));
            const long cy = std::min(cells - 1, static_cast<long>(buf[0].y * cells));
            bool keep = true;
            for (const auto& ring : rings) {
                for (const auto& [dx, dy] : ring) {
                    const long bx = (cx + dx + cells) % cells;
                    const long by = (cy + dy + cells) % cells;
                    const auto& cell = bucket[static_cast<std::size_t>(by * cells + bx)];
                    for (auto it = cell.rbegin(); it != cell.rend(); ++it) {
                        // Orbits usually separate at the last step; testing the
                        // stored endpoint avoids touching the full orbit row.
                        if (dist(tip, ends[static_cast<std::size_t>(*it)]) >= eps) continue;
                        if (!torus_separated(buf.data(), kept.data() + *it * n, n - 1, eps)) {
                            keep = false;
                            break;
                        }
                    }
                    if (!keep) break;
                }
                if (!keep) break;
            }
            if (keep) {
                kept.insert(kept.end(), buf.begin(), buf.end());
                ends.push_back(tip);
                bucket[static_cast<std::size_t>(cy * cells + cx)].push_back(count);
                ++count;
            }
        }
    }
    return count;
}

} // namespace detail

/// Size of a greedily built (n,eps)-separated subset of a uniform candidate
/// grid (`grid` points on the circle, `grid` per axis on the torus) under the
/// orbit metric d_n.  The sweep order is the fixed grid order, so the result
/// is deterministic and is a certified lower bound for the true maximum.
inline long separated_count(const map_seq& F, int n, double eps, long grid) {
    require(n >= 1, errc::parameter_out_of_range, "separated_count: n must be >= 1");
    require(eps > 0.0, errc::parameter_out_of_range, "separated_count: eps must be positive");
    require(grid >= 2, errc::parameter_out_of_range, "separated_count: grid too small");
    require(1.0 / static_cast<double>(grid) < eps / 4.0, errc::grid_too_coarse,
            "separated_count: candidate spacing must stay below eps/4");
    if (F.space() == phase_space::circle) return detail::greedy_circle(F, n, eps, grid);
    return detail::greedy_torus(F, n, eps, grid);
}

/// Separated-set counts over an (eps, n) window plus least-squares growth
/// rates.  `estimate` is the slope at the smallest eps; `extrapolated` pushes
/// one more rung down the eps ladder by first-order extrapolation and is
/// reported as a diagnostic only.
struct entropy_report {
    std::vector<double> eps_schedule;
    std::vector<int> n_schedule;
    std::vector<std::vector<long>> counts;  ///< counts[e][k] = s_{n_k}(eps_e)
    std::vector<double> slopes;             ///< per-eps slope of log s_n vs n
    std::vector<double> slope_se;           ///< standard error of each slope
    double estimate = 0.0;
    double error_bar = 0.0;
    double extrapolated = 0.0;
    long grid = 0;
};

inline entropy_report entropy_estimate(const map_seq& F, std::vector<double> eps_schedule,
                                       std::vector<int> n_schedule, long grid) {
    require(!eps_schedule.empty() && n_schedule.size() >= 2, errc::parameter_out_of_range,
            "entropy_estimate: need eps values and >= 2 orbit lengths");
    for (std::size_t e = 1; e < eps_schedule.size(); ++e)
        require(eps_schedule[e] < eps_schedule[e - 1], errc::parameter_out_of_range,
                "entropy_estimate: eps schedule must decrease");
    for (std::size_t k = 1; k < n_schedule.size(); ++k)
        require(n_schedule[k] > n_schedule[k - 1], errc::parameter_out_of_range,
                "entropy_estimate: n schedule must increase");

    entropy_report rep;
    rep.eps_schedule = std::move(eps_schedule);
    rep.n_schedule = std::move(n_schedule);
    rep.grid = grid;
    std::vector<double> xs, ys;
    for (double eps : rep.eps_schedule) {
        std::vector<long> row;
        xs.clear();
        ys.clear();
        for (int n : rep.n_schedule) {
            long s = separated_count(F, n, eps, grid);
            row.push_back(s);
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(static_cast<double>(s)));
        }
        rep.counts.push_back(std::move(row));
        line_fit fit = fit_line(xs, ys);
        double sxx = 0.0, mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        for (double x : xs) sxx += (x - mean) * (x - mean);
        rep.slopes.push_back(fit.slope);
        rep.slope_se.push_back(fit.residual_rms / std::sqrt(sxx));
    }
    rep.estimate = rep.slopes.back();
    rep.error_bar = rep.slope_se.back();
    rep.extrapolated = rep.slopes.size() >= 2
                           ? 2.0 * rep.slopes.back() - rep.slopes[rep.slopes.size() - 2]
                           : rep.estimate;
    return rep;
}

/// Two-sided comparison between a convergent-tail sequence and its limit map:
/// beyond the settling index the sequence counted at scale eps/3 dominates
/// the limit counted at eps, and vice versa with the roles of the scales
/// swapped.  Margins are log-count differences; a negative margin on a tested
/// row means a grid artifact or a wrong settling index and raises an error.
struct entropy_comparison_report {
    double eps = 0.0;
    int settle_index = 0;  ///< rows with n below this are reported but not gated
    std::vector<int> n_schedule;
    std::vector<long> seq_fine;     ///< s_n(F, eps/3)
    std::vector<long> limit_coarse; ///< s_n(f, eps)
    std::vector<long> limit_fine;   ///< s_n(f, eps/3)
    std::vector<long> seq_coarse;   ///< s_n(F, eps)
    std::vector<double> forward_margin;
    std::vector<double> reciprocal_margin;
};

inline entropy_comparison_report entropy_comparison(const map_seq& F, const circle_map& f,
                                                    double eps, std::vector<int> n_schedule,
                                                    int settle_index, long grid) {
    require(!n_schedule.empty(), errc::parameter_out_of_range,
            "entropy_comparison: empty n schedule");
    map_seq limit = map_seq::constant(f);
    entropy_comparison_report rep;
    rep.eps = eps;
    rep.settle_index = settle_index;
    rep.n_schedule = std::move(n_schedule);
    for (int n : rep.n_schedule) {
        long a = separated_count(F, n, eps / 3.0, grid);
        long b = separated_count(limit, n, eps, grid);
        long c = separated_count(limit, n, eps / 3.0, grid);
        long d = separated_count(F, n, eps, grid);
        rep.seq_fine.push_back(a);
        rep.limit_coarse.push_back(b);
        rep.limit_fine.push_back(c);
        rep.seq_coarse.push_back(d);
        rep.forward_margin.push_back(std::log(static_cast<double>(a)) -
                                     std::log(static_cast<double>(b)));
        rep.reciprocal_margin.push_back(std::log(static_cast<double>(c)) -
                                        std::log(static_cast<double>(d)));
        if (n >= settle_index) {
            require(a >= b, errc::inequality_violated,
                    "entropy_comparison: fine-scale sequence count fell below the limit");
            require(c >= d, errc::inequality_violated,
                    "entropy_comparison: fine-scale limit count fell below the sequence");
        }
    }
    return rep;
}

} // namespace seqdyn
