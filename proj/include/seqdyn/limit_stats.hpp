#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "seqdyn/core.hpp"
#include "seqdyn/digits.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Green-Kubo variance
// ---------------------------------------------------------------------------

/// sigma^2 = C_0 + 2 sum_{j=1}^{lag_max} C_j with C_j = E[phi(x) phi(f^j x)]
/// under the reference measure, estimated by Monte Carlo.  Standard errors
/// come from independent orbit blocks, so within-block correlation of the
/// sliding starts is accounted for.
struct green_kubo_result {
    double sigma2 = 0.0;
    double sigma2_se = 0.0;
    double mean = 0.0;
    double mean_se = 0.0;
    std::vector<double> lag_cov;  ///< C_0 .. C_{lag_max}
    long n_samples = 0;
    int lag_max = 0;
    std::uint64_t seed = 0;
};

inline green_kubo_result sigma_green_kubo(const circle_map& f, const observable& phi,
                                          long n_samples, int lag_max = 40,
                                          std::uint64_t seed = 1) {
    require(phi.space == phase_space::circle, errc::domain_error,
            "sigma_green_kubo: need a circle observable");
    require(lag_max >= 1 && lag_max <= 4096, errc::parameter_out_of_range,
            "sigma_green_kubo: lag_max out of range");
    const long block = 1 << 14;
    require(n_samples >= 2 * block, errc::parameter_out_of_range,
            "sigma_green_kubo: need at least two sample blocks");

    green_kubo_result res;
    res.n_samples = n_samples;
    res.lag_max = lag_max;
    res.seed = seed;
    res.lag_cov.assign(static_cast<std::size_t>(lag_max) + 1, 0.0);

    const bool tape_engine = f.is_linear() && f.degree() == 2;
    const long blocks = (n_samples + block - 1) / block;
    std::vector<double> vals(static_cast<std::size_t>(block + lag_max));
    std::vector<double> block_y, block_m;  // per-block means for the SE
    double sum_y = 0.0, sum_m = 0.0;
    long done = 0;
    for (long b = 0; b < blocks; ++b) {
        const long count = std::min<long>(block, n_samples - done);
        const long span = count + lag_max;
        rng_stream rng(seed, {0x73696732u, static_cast<std::uint64_t>(b)});
        if (tape_engine) {
            // Doubling orbits are bit shifts: a random tape gives the exact
            // orbit of a Lebesgue-random start with no float collapse.
            bit_tape tape = bit_tape::random(rng, span + 64);
            window_cursor cur(tape);
            for (long i = 0; i < span; ++i) {
                vals[static_cast<std::size_t>(i)] = phi.eval_circle(cur.value());
                cur.advance();
            }
        } else {
            double x = rng.u01();
            for (long i = 0; i < span; ++i) {
                vals[static_cast<std::size_t>(i)] = phi.eval_circle(x);
                x = f.eval(x);
            }
        }
        // Sliding tail sum S_i = vals[i+1] + ... + vals[i+lag_max].
        double tail = 0.0;
        for (long j = 1; j <= lag_max; ++j) tail += vals[static_cast<std::size_t>(j)];
        double by = 0.0, bm = 0.0;
        for (long i = 0; i < count; ++i) {
            const double v = vals[static_cast<std::size_t>(i)];
            by += v * (v + 2.0 * tail);
            bm += v;
            if (i + 1 < count)
                tail += vals[static_cast<std::size_t>(i + lag_max + 1)] -
                        vals[static_cast<std::size_t>(i + 1)];
            for (int j = 0; j <= lag_max; ++j)
                res.lag_cov[static_cast<std::size_t>(j)] +=
                    v * vals[static_cast<std::size_t>(i + j)];
        }
        sum_y += by;
        sum_m += bm;
        if (count == block) {
            block_y.push_back(by / static_cast<double>(count));
            block_m.push_back(bm / static_cast<double>(count));
        }
        done += count;
    }
    res.sigma2 = sum_y / static_cast<double>(n_samples);
    res.mean = sum_m / static_cast<double>(n_samples);
    for (double& c : res.lag_cov) c /= static_cast<double>(n_samples);

    auto block_se = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / (static_cast<double>(v.size()) - 1.0) /
                         static_cast<double>(v.size()));
    };
    res.sigma2_se = block_se(block_y);
    res.mean_se = block_se(block_m);
    require(std::fabs(res.mean) <= 3.0 * res.mean_se + 1e-14, errc::not_mean_zero,
            "sigma_green_kubo: observable mean is nonzero beyond 3 standard errors");
    return res;
}

// ---------------------------------------------------------------------------
// Partial-sum ensembles
// ---------------------------------------------------------------------------

/// Ensemble of Birkhoff partial sums at logarithmic checkpoints.
struct series_stats {
    std::vector<long> checkpoints;
    std::vector<std::vector<double>> sums;  ///< sums[c][member] = S_{n_c}
    long ensemble = 0;
    std::uint64_t seed = 0;
    bool rate_checked = false;  ///< tail decay admissible (or sequence constant)
};

/// Powers of 4 from 64 up to (and always including) n.
inline std::vector<long> log_checkpoints(long n) {
    std::vector<long> cps;
    for (long c = 64; c < n; c *= 4) cps.push_back(c);
    cps.push_back(n);
    return cps;
}

inline series_stats partial_sum_ensemble(const map_seq& F, const observable& phi, long n,
                                         long ensemble, std::uint64_t seed,
                                         int threads = 1) {
    require(F.space() == phase_space::circle, errc::domain_error,
            "partial_sum_ensemble: circle sequences only");
    require(phi.space == phase_space::circle, errc::domain_error,
            "partial_sum_ensemble: need a circle observable");
    require(phi.mean_zero(), errc::not_mean_zero,
            "partial_sum_ensemble: observable must be mean zero");
    require(n >= 64, errc::parameter_out_of_range, "partial_sum_ensemble: n too small");
    require(ensemble >= 2, errc::parameter_out_of_range,
            "partial_sum_ensemble: ensemble too small");
    require(F.form() != map_seq::kind::periodic, errc::domain_error,
            "partial_sum_ensemble: sequence must be constant or convergent-tail");

    series_stats st;
    st.checkpoints = log_checkpoints(n);
    st.ensemble = ensemble;
    st.seed = seed;
    // The proof's rate condition a_j <= C j^{-(1/2+eps)/alpha} holds for any
    // power decay faster than j^{-1/2} (alpha = 1) and for geometric decay;
    // slower declared tails are run anyway but flagged unchecked.
    st.rate_checked = F.form() == map_seq::kind::constant ||
                      F.schedule().form == decay_schedule::kind::geometric ||
                      F.schedule().exponent > 0.5;
    st.sums.assign(st.checkpoints.size(),
                   std::vector<double>(static_cast<std::size_t>(ensemble), 0.0));

    const bool tape_engine =
        F.form() == map_seq::kind::constant && F.circle_limit().is_linear() &&
        F.circle_limit().degree() == 2;
    const auto& cps = st.checkpoints;
    parallel_for(ensemble, threads, [&](long m) {
        rng_stream rng(seed, {0x656e7331u, static_cast<std::uint64_t>(m)});
        double acc = 0.0;
        std::size_t next = 0;
        if (tape_engine) {
            bit_tape tape = bit_tape::random(rng, n + 64);
            window_cursor cur(tape);
            for (long j = 0; j < n; ++j) {
                acc += phi.eval_circle(cur.value());
                cur.advance();
                if (j + 1 == cps[next]) {
                    st.sums[next][static_cast<std::size_t>(m)] = acc;
                    ++next;
                }
            }
        } else {
            double x = rng.u01();
            for (long j = 0; j < n; ++j) {
                acc += phi.eval_circle(x);
                x = F.circle_step(j, x);
                if (j + 1 == cps[next]) {
                    st.sums[next][static_cast<std::size_t>(m)] = acc;
                    ++next;
                }
            }
        }
    });
    return st;
}

// ---------------------------------------------------------------------------
// CLT normality check
// ---------------------------------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Two-sided Kolmogorov p-value with the small-sample correction
/// lambda = D (sqrt(m) + 0.12 + 0.11/sqrt(m)).
inline double ks_p_value(double d, long m) {
    const double sm = std::sqrt(static_cast<double>(m));
    const double lam = d * (sm + 0.12 + 0.11 / sm);
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        p += 2.0 * ((k % 2 == 1) ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

/// KS statistic of sorted samples against a standard normal.
inline double ks_vs_normal(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double m = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double c = normal_cdf(v[i]);
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / m - c));
        d = std::max(d, std::fabs(c - static_cast<double>(i) / m));
    }
    return d;
}

struct clt_row {
    long n = 0;
    double ks = 0.0;
    double p_value = 0.0;
};

struct clt_report {
    double sigma2 = 0.0;
    bool degenerate = false;
    std::vector<clt_row> rows;      ///< one per checkpoint (normal branch)
    double final_variance = 0.0;    ///< sample variance of S_n/sqrt(n), last checkpoint
    bool pass = false;
};

/// Normality of the normalized sums S_n/(sigma sqrt(n)) per checkpoint; the
/// verdict is the Kolmogorov p-value at the final checkpoint.  A declared
/// sigma^2 near zero flips to the collapse check Var(S_n/sqrt(n)) < 0.05 and
/// raises an error if the ensemble contradicts the declaration.
inline clt_report clt_check(const series_stats& st, double sigma2) {
    require(st.ensemble >= 500, errc::parameter_out_of_range,
            "clt_check: need an ensemble of at least 500");
    require(!st.checkpoints.empty(), errc::parameter_out_of_range, "clt_check: empty stats");
    clt_report rep;
    rep.sigma2 = sigma2;

    const auto& last = st.sums.back();
    const double n_last = static_cast<double>(st.checkpoints.back());
    double mean = 0.0;
    for (double s : last) mean += s;
    mean /= static_cast<double>(last.size());
    double var = 0.0;
    for (double s : last) var += (s - mean) * (s - mean);
    var /= (static_cast<double>(last.size()) - 1.0) * n_last;
    rep.final_variance = var;

    if (sigma2 < 0.05) {
        rep.degenerate = true;
        rep.pass = var < 0.05;
        require(rep.pass, errc::degenerate_variance,
                "clt_check: declared degenerate but partial sums do not collapse");
        return rep;
    }
    for (std::size_t c = 0; c < st.checkpoints.size(); ++c) {
        const double norm = std::sqrt(sigma2 * static_cast<double>(st.checkpoints[c]));
        std::vector<double> v(st.sums[c].size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = st.sums[c][i] / norm;
        clt_row row;
        row.n = st.checkpoints[c];
        row.ks = ks_vs_normal(std::move(v));
        row.p_value = ks_p_value(row.ks, st.ensemble);
        rep.rows.push_back(row);
    }
    rep.pass = rep.rows.back().p_value > 0.01;
    return rep;
}

// ---------------------------------------------------------------------------
// ASIP rate bookkeeping
// ---------------------------------------------------------------------------

/// The admissible perturbation schedule a_j = C j^{-(1/2+eps)/alpha} together
/// with its drift budget sum_{j<n} a_j^alpha, which the invariance-principle
/// error term must stay under (growth n^{1/2-eps}).
struct rate_schedule_report {
    double c = 0.0;
    double eps = 0.0;
    double alpha = 0.0;
    long n_max = 0;
    std::vector<double> a;          ///< a_j for j = 0..n_max-1 (a_0 = C)
    std::vector<long> checkpoints;
    std::vector<double> drift;      ///< D_n = sum_{j<n} a_j^alpha at checkpoints
    double fitted_exponent = 0.0;   ///< slope of log D_n vs log n
    double fitted_c = 0.0;          ///< max_n D_n / n^{1/2-eps}
    bool boundary_case = false;     ///< eps close to 1/2: budget nearly logarithmic
};

inline rate_schedule_report asip_rate_schedule(double c, double eps, double alpha,
                                               long n_max) {
    require(c > 0.0, errc::parameter_out_of_range, "asip_rate_schedule: C must be positive");
    require(eps > 0.0 && eps < 0.5, errc::parameter_out_of_range,
            "asip_rate_schedule: eps must lie in (0, 1/2)");
    require(alpha > 0.0 && alpha <= 1.0, errc::parameter_out_of_range,
            "asip_rate_schedule: alpha must lie in (0, 1]");
    require(n_max >= 256, errc::parameter_out_of_range, "asip_rate_schedule: n_max too small");

    rate_schedule_report rep;
    rep.c = c;
    rep.eps = eps;
    rep.alpha = alpha;
    rep.n_max = n_max;
    rep.boundary_case = (0.5 - eps) < 0.05;
    decay_schedule sched = decay_schedule::asip_rate(c, eps, alpha);
    rep.a.resize(static_cast<std::size_t>(n_max));
    for (long j = 0; j < n_max; ++j) rep.a[static_cast<std::size_t>(j)] = sched.at(j);

    rep.checkpoints = log_checkpoints(n_max);
    const double growth = 0.5 - eps;
    double d = 0.0;
    std::size_t next = 0;
    std::vector<double> lx, ly;
    for (long n = 1; n <= n_max; ++n) {
        d += std::pow(rep.a[static_cast<std::size_t>(n - 1)], alpha);
        rep.fitted_c = std::max(rep.fitted_c, d / std::pow(static_cast<double>(n), growth));
        if (next < rep.checkpoints.size() && n == rep.checkpoints[next]) {
            rep.drift.push_back(d);
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(d));
            ++next;
        }
    }
    rep.fitted_exponent = fit_line(lx, ly).slope;
    return rep;
}

} // namespace seqdyn
