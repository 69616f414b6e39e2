#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqdyn/config.hpp"
#include "seqdyn/conjugacy.hpp"
#include "seqdyn/core.hpp"
#include "seqdyn/entropy.hpp"
#include "seqdyn/ergodic.hpp"
#include "seqdyn/io.hpp"
#include "seqdyn/limit_stats.hpp"
#include "seqdyn/maps.hpp"
#include "seqdyn/sequence.hpp"
#include "seqdyn/shadowing.hpp"
#include "seqdyn/version.hpp"

namespace seqdyn {

// ---------------------------------------------------------------------------
// Experiment runner: named presets over the library, CSV/JSON artifacts,
// machine-readable pass/fail.
// ---------------------------------------------------------------------------

struct check_result {
    std::string name;
    double measured{0.0};
    std::string tolerance;  ///< human-readable declared bound, e.g. "<= 0.01"
    bool pass{false};
};

struct run_result {
    std::string preset;
    bool pass{false};
    std::vector<check_result> checks;
    std::vector<std::string> artifacts;  ///< file names relative to the out dir
    json summary;
};

struct run_options {
    std::optional<std::string> out_dir;   ///< overrides [experiment] out
    std::optional<std::uint64_t> seed;    ///< overrides [experiment] seed
    int threads{1};
};

namespace detail {

struct run_context {
    std::filesystem::path out;
    std::uint64_t seed{1};
    int threads{1};
    std::vector<check_result> checks;
    std::vector<std::string> artifacts;
    json details = json::object();

    std::filesystem::path path(const std::string& name) {
        artifacts.push_back(name);
        return out / name;
    }

    void check_le(const std::string& name, double measured, double bound) {
        checks.push_back({name, measured, "<= " + format_double(bound), measured <= bound});
    }
    void check_ge(const std::string& name, double measured, double bound) {
        checks.push_back({name, measured, ">= " + format_double(bound), measured >= bound});
    }
    void check_within(const std::string& name, double measured, double target, double tol) {
        checks.push_back({name, measured,
                          "in " + format_double(target) + " +- " + format_double(tol),
                          std::fabs(measured - target) <= tol});
    }
    void check_flag(const std::string& name, bool ok, const std::string& meaning) {
        checks.push_back({name, ok ? 1.0 : 0.0, meaning, ok});
    }
    /// A computation that should have produced a value threw instead.
    void check_error(const std::string& name, const std::string& what) {
        checks.push_back({name, std::numeric_limits<double>::quiet_NaN(), what, false});
    }
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "shadowing-lipschitz", "conjugacy-residual", "quasi-conjugacy",
        "birkhoff-stability",  "periodic-measure",   "irregular-point",
        "entropy",             "clt-asip"};
    return names;
}

inline std::string preset_list_text() {
    std::string s;
    for (const auto& n : preset_names()) {
        if (!s.empty()) s += ", ";
        s += n;
    }
    return s;
}

[[noreturn]] inline void unknown_preset(const std::string& name) {
    fail(errc::config_parse,
         "unknown preset '" + name + "'; valid presets: " + preset_list_text());
}

/// Allowed config keys per preset ("section.key").
inline std::set<std::string> preset_schema(const std::string& preset) {
    std::set<std::string> s = {"experiment.preset", "experiment.seed", "experiment.out"};
    auto add = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) s.insert(k);
    };
    if (preset == "shadowing-lipschitz")
        add({"shadowing.family", "shadowing.amp", "shadowing.deltas", "shadowing.trials",
             "shadowing.len"});
    else if (preset == "conjugacy-residual")
        add({"conjugacy.amp", "conjugacy.grid", "conjugacy.n_max", "conjugacy.depth",
             "conjugacy.oracle_points"});
    else if (preset == "quasi-conjugacy")
        add({"quasi.amp_schedule", "quasi.defect_schedule", "quasi.grid", "quasi.tail_ratio",
             "quasi.tail_k_max", "quasi.tail_k_gate", "quasi.tail_tol", "quasi.tail_lead_amp"});
    else if (preset == "birkhoff-stability")
        add({"birkhoff.amp", "birkhoff.phase", "birkhoff.exponent", "birkhoff.starts",
             "birkhoff.n", "birkhoff.depth", "birkhoff.ref_points", "birkhoff.bins"});
    else if (preset == "periodic-measure")
        add({"periodic.amp", "periodic.n", "periodic.grid", "periodic.ref_points",
             "periodic.bins"});
    else if (preset == "irregular-point")
        add({"irregular.trace_len", "irregular.settle", "irregular.depth", "irregular.amp",
             "irregular.phase", "irregular.exponent"});
    else if (preset == "entropy")
        add({"entropy.parts", "entropy.grid", "entropy.eps", "entropy.n", "entropy.cat_side",
             "entropy.cat_eps", "entropy.cat_n", "entropy.cmp_eps", "entropy.cmp_n",
             "entropy.cmp_amp", "entropy.cmp_phase", "entropy.cmp_exponent"});
    else if (preset == "clt-asip")
        add({"clt.sigma_samples", "clt.lag", "clt.n", "clt.ensemble", "clt.amp", "clt.phase",
             "clt.exponent", "clt.drift_c", "clt.drift_eps", "clt.drift_alpha", "clt.drift_n"});
    else
        unknown_preset(preset);
    return s;
}

// -- shared constructions ----------------------------------------------------

inline circle_map doubling() { return circle_map(2, {}); }

inline map_seq tail_sequence(double amp, double phase, double exponent) {
    return map_seq::tail_circle(doubling(), {{amp, 1, phase}},
                                decay_schedule::power(1.0, exponent));
}

// -- preset: shadowing-lipschitz ---------------------------------------------

inline void run_shadowing(const experiment_config& cfg, run_context& ctx) {
    const std::string family = cfg.get_string("shadowing", "family", "doubling");
    const bool torus = family == "cat" || family == "perturbed-cat";
    const double amp_default = torus ? 0.01 : 0.05;
    const double amp = cfg.get_double("shadowing", "amp", amp_default);
    const std::vector<double> deltas = cfg.get_doubles(
        "shadowing", "deltas", torus ? std::vector<double>{1e-3, 5e-4, 2.5e-4}
                                     : std::vector<double>{1e-2, 1e-3, 1e-4});
    const int trials = static_cast<int>(cfg.get_long("shadowing", "trials", 100));
    const long len = cfg.get_long("shadowing", "len", 500);

    map_seq F = [&] {
        if (family == "doubling") return map_seq::constant(doubling());
        if (family == "perturbed-doubling")
            return map_seq::constant(circle_map(2, {{amp, 1, 0.0}}));
        if (family == "cat") return map_seq::constant(torus_map::cat());
        if (family == "perturbed-cat")
            return map_seq::constant(torus_map::cat({{{amp, 0.7 * amp}, 1, 1, 0.3}}));
        fail(errc::config_parse, "unknown shadowing family '" + family + "'");
    }();

    hyperbolic_splitting split;
    if (torus) split = make_splitting(F);

    struct trial_row {
        double beta{0.0};
        int iterations{0};
        bool certified{false};
        bool failed{false};
    };

    csv_writer csv(ctx.path("shadowing.csv"), {"delta", "trial", "beta", "iterations",
                                               "certified"});
    std::vector<double> beta_max(deltas.size(), 0.0);
    long failures = 0, uncertified = 0;
    for (std::size_t si = 0; si < deltas.size(); ++si) {
        std::vector<trial_row> rows(static_cast<std::size_t>(trials));
        parallel_for(static_cast<std::size_t>(trials), ctx.threads, [&](std::size_t t) {
            rng_stream rng(ctx.seed, {0x73686477u, si, t});
            point x0 = torus ? point::on_torus(rng.u01(), rng.u01())
                             : point::on_circle(rng.u01());
            std::uint64_t orbit_seed = ctx.seed ^ (0x9e3779b97f4a7c15ull * (t + 1) + si);
            try {
                pseudo_orbit p = perturbed_orbit(F, x0, deltas[si], len, orbit_seed);
                shadow_result r = torus ? shadow_anosov(F, p, split) : shadow_expanding(F, p);
                rows[t] = {r.beta, r.iterations, r.unique_certified, false};
            } catch (const error&) {
                rows[t].failed = true;
            }
        });
        for (int t = 0; t < trials; ++t) {
            const trial_row& r = rows[static_cast<std::size_t>(t)];
            csv.row({deltas[si], static_cast<long>(t), r.beta, static_cast<long>(r.iterations),
                     std::string(r.failed ? "error" : (r.certified ? "yes" : "no"))});
            if (r.failed) {
                ++failures;
                continue;
            }
            beta_max[si] = std::max(beta_max[si], r.beta);
            if (!r.certified) ++uncertified;
        }
    }
    csv.close();

    const double total = static_cast<double>(trials) * static_cast<double>(deltas.size());
    ctx.check_le("shadow_failures", static_cast<double>(failures) / total, 0.0);
    ctx.check_ge("certified_fraction", 1.0 - static_cast<double>(uncertified + failures) / total,
                 1.0);

    double L_hat = 0.0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (beta_max[i] <= 0.0) continue;
        L_hat = std::max(L_hat, beta_max[i] / deltas[i]);
        lx.push_back(std::log(deltas[i]));
        ly.push_back(std::log(beta_max[i]));
    }
    if (!torus) {
        // Expanding bound: beta <= lambda/(1-lambda) * delta plus truncation.
        const double lam = F.lambda_sup();
        const double gain = lam / (1.0 - lam);
        for (std::size_t i = 0; i < deltas.size(); ++i)
            ctx.check_le("beta_bound_delta_" + format_double(deltas[i]), beta_max[i],
                         gain * deltas[i] + 1e-9);
    }
    if (lx.size() >= 2) {
        line_fit fit = fit_line(lx, ly);
        ctx.check_within("lipschitz_slope", fit.slope, 1.0, 0.1);
        ctx.details["slope"] = fit.slope;
    }
    ctx.details["family"] = family;
    ctx.details["L_hat"] = L_hat;
    json bm = json::array();
    for (std::size_t i = 0; i < deltas.size(); ++i)
        bm.push_back({{"delta", deltas[i]}, {"beta_max", beta_max[i]}});
    ctx.details["beta_max"] = bm;
}

// -- preset: conjugacy-residual ----------------------------------------------

inline void run_conjugacy_residual(const experiment_config& cfg, run_context& ctx) {
    const double amp = cfg.get_double("conjugacy", "amp", 0.05);
    const int grid = static_cast<int>(cfg.get_long("conjugacy", "grid", 4096));
    const int n_max = static_cast<int>(cfg.get_long("conjugacy", "n_max", 20));
    const int depth = static_cast<int>(cfg.get_long("conjugacy", "depth", 40));
    const int oracle_points = static_cast<int>(cfg.get_long("conjugacy", "oracle_points", 1024));

    circle_map f = doubling();
    circle_map g(2, {{amp, 1, 0.0}});
    map_seq F = map_seq::constant(f);
    map_seq G = map_seq::constant(g);

    const double residual = conjugacy_residual(F, G, n_max, grid, depth, ctx.threads);
    conjugacy_sample h = sequential_conjugacy(F, G, grid, depth, ctx.threads);

    csv_writer sample(ctx.path("conjugacy_sample.csv"), {"grid_x", "image_x"});
    for (int i = 0; i < grid; ++i)
        sample.row({static_cast<double>(i) / grid, wrap_unit(h.lifted()[static_cast<std::size_t>(i)])});
    sample.close();

    // Independent symbolic check: pull the seed back through matching inverse
    // branches instead of shadowing.
    double oracle_max = 0.0;
    std::vector<double> diffs(static_cast<std::size_t>(oracle_points), 0.0);
    parallel_for(static_cast<std::size_t>(oracle_points), ctx.threads, [&](std::size_t i) {
        point x = point::on_circle((static_cast<double>(i) + 0.5) / oracle_points);
        point via_shadow = point_conjugacy(F, G, x, depth);
        point via_code = itinerary_oracle(g, f, x, depth);
        diffs[i] = dist(via_shadow, via_code);
    });
    csv_writer oracle(ctx.path("oracle.csv"), {"x", "diff"});
    for (int i = 0; i < oracle_points; ++i) {
        oracle.row({(static_cast<double>(i) + 0.5) / oracle_points,
                    diffs[static_cast<std::size_t>(i)]});
        oracle_max = std::max(oracle_max, diffs[static_cast<std::size_t>(i)]);
    }
    oracle.close();

    ctx.check_le("relation_residual", residual, 1e-6);
    ctx.check_le("oracle_max_diff", oracle_max, 1e-6);
    ctx.check_flag("homeomorphism_certified", h.homeomorphism_certified(),
                   "grid lift strictly monotone");
    ctx.details["sup_dist_to_identity"] = h.sup_dist_to_identity();
    ctx.details["chain_defect"] = h.chain_defect();
    ctx.details["depth"] = depth;
    ctx.details["grid"] = grid;
}

// -- preset: quasi-conjugacy -------------------------------------------------

inline void run_quasi_conjugacy(const experiment_config& cfg, run_context& ctx) {
    const std::vector<double> amp_schedule =
        cfg.get_doubles("quasi", "amp_schedule", {0.04, 0.02, 0.01});
    const std::vector<double> defect_schedule =
        cfg.get_doubles("quasi", "defect_schedule", {0.02, 0.01});
    const int grid = static_cast<int>(cfg.get_long("quasi", "grid", 4096));
    const double tail_ratio = cfg.get_double("quasi", "tail_ratio", 0.5);
    const int tail_k_max = static_cast<int>(cfg.get_long("quasi", "tail_k_max", 14));
    const int tail_k_gate = static_cast<int>(cfg.get_long("quasi", "tail_k_gate", 12));
    const double tail_tol = cfg.get_double("quasi", "tail_tol", 1e-4);
    const double tail_lead_amp = cfg.get_double("quasi", "tail_lead_amp", 0.1);

    map_seq F = map_seq::constant(doubling());

    // Part 1: conjugacy distance to the identity scales linearly in the
    // perturbation amplitude, with one constant across the schedule.
    csv_writer prox(ctx.path("proximity.csv"), {"epsilon", "sup_dist", "ratio"});
    double ratio_min = 1e300, ratio_max = 0.0;
    for (double eps : amp_schedule) {
        map_seq G = map_seq::constant(circle_map(2, {{eps, 1, 0.0}}));
        conjugacy_sample h = sequential_conjugacy(F, G, grid, 0, ctx.threads);
        double ratio = h.sup_dist_to_identity() / eps;
        prox.row({eps, h.sup_dist_to_identity(), ratio});
        ratio_min = std::min(ratio_min, ratio);
        ratio_max = std::max(ratio_max, ratio);
    }
    prox.close();
    ctx.check_le("proximity_ratio_spread", ratio_max / ratio_min, 2.0);
    ctx.details["L_hat"] = ratio_max;

    // Part 2: geometric-tail sequence; the shifted conjugacies approach the
    // identity at the declared rate.
    circle_map lead(2, {{tail_lead_amp, 1, 0.0}});
    map_seq T = map_seq::tail_circle(doubling(), {{1.0 / two_pi, 1, 0.0}},
                                     decay_schedule::geometric(1.0, tail_ratio), {lead});
    map_seq G0 = map_seq::constant(doubling());
    csv_writer tail(ctx.path("tail.csv"), {"k", "decay", "sup_dist"});
    bool monotone = true;
    double prev = 1e300, gate_value = 1e300;
    for (int k = 0; k <= tail_k_max; ++k) {
        conjugacy_sample h = shifted_conjugacy(T, G0, k, 2048, 0, ctx.threads);
        double d = h.sup_dist_to_identity();
        tail.row({static_cast<long>(k), T.tail_decay(k), d});
        if (!(d < prev)) monotone = false;
        if (k == tail_k_gate) gate_value = d;
        prev = d;
    }
    tail.close();
    ctx.check_flag("tail_monotone", monotone, "sup_dist strictly decreasing in the shift");
    ctx.check_le("tail_supdist_k" + std::to_string(tail_k_gate), gate_value, tail_tol);

    // Part 3: measured quasi-conjugacy defect against the two-sided bound.
    // The perturbed sequence's orbits are shadowed in the doubling sequence,
    // whose branch contraction is exactly 1/2, so the bound is exactly 2 eps.
    csv_writer def(ctx.path("defect.csv"),
                   {"epsilon", "epsilon_certified", "defect", "bound"});
    for (double eps : defect_schedule) {
        map_seq P = map_seq::periodic(std::vector<circle_map>{
            circle_map(2, {{eps, 1, 0.0}}), circle_map(2, {{eps, 1, 3.141592653589793}})});
        quasi_conjugacy_report q = quasi_conjugacy_expanding(P, F, grid, 0, 16, ctx.threads);
        def.row({eps, q.epsilon, q.defect, 2.0 * eps});
        ctx.check_le("quasi_defect_eps_" + format_double(eps), q.defect, 2.0 * eps);
    }
    def.close();
}

// -- preset: birkhoff-stability ----------------------------------------------

inline void run_birkhoff(const experiment_config& cfg, run_context& ctx) {
    const double amp = cfg.get_double("birkhoff", "amp", 0.05);
    const double phase = cfg.get_double("birkhoff", "phase", 0.7);
    const double exponent = cfg.get_double("birkhoff", "exponent", 1.6);
    const int starts = static_cast<int>(cfg.get_long("birkhoff", "starts", 200));
    const long n = cfg.get_long("birkhoff", "n", 1000000);
    const int depth = static_cast<int>(cfg.get_long("birkhoff", "depth", 40));
    const long ref_points = cfg.get_long("birkhoff", "ref_points", 65536);
    const int bins = static_cast<int>(cfg.get_long("birkhoff", "bins", 256));

    map_seq F = tail_sequence(amp, phase, exponent);
    map_seq G = map_seq::constant(doubling());
    observable phi = observable::cos1();
    empirical_measure ref = reference_measure(phase_space::circle, ref_points);

    struct start_row {
        double u{0.0}, x0{0.0}, avg{0.0}, ks{0.0};
    };
    std::vector<start_row> rows(static_cast<std::size_t>(starts));
    parallel_for(static_cast<std::size_t>(starts), ctx.threads, [&](std::size_t i) {
        rng_stream rng(ctx.seed, {0x62697274u, i});
        double u = rng.u01();
        point x0 = point_conjugacy(F, G, point::on_circle(u), depth);
        empirical_measure mu;
        mu.space = phase_space::circle;
        mu.origin = measure_origin::orbit;
        mu.samples.reserve(static_cast<std::size_t>(n));
        double x = x0.x, sum = 0.0;
        for (long j = 0; j < n; ++j) {
            mu.samples.push_back(point::on_circle(x));
            sum += phi.eval_circle(x);
            x = F.circle_step(j, x);
        }
        rows[i] = {u, x0.x, sum / static_cast<double>(n), measure_distance(mu, ref)};
    });

    csv_writer csv(ctx.path("starts.csv"), {"start", "u", "x0", "avg", "ks"});
    std::vector<double> ks_values;
    long within = 0;
    double worst_avg = 0.0;
    for (int i = 0; i < starts; ++i) {
        const start_row& r = rows[static_cast<std::size_t>(i)];
        csv.row({static_cast<long>(i), r.u, r.x0, r.avg, r.ks});
        if (std::fabs(r.avg) <= 0.01) ++within;
        worst_avg = std::max(worst_avg, std::fabs(r.avg));
        ks_values.push_back(r.ks);
    }
    csv.close();
    std::sort(ks_values.begin(), ks_values.end());
    const double ks_median = ks_values[ks_values.size() / 2];

    // Histogram of the first start's orbit, recomputed (orbits are not kept).
    {
        rng_stream rng(ctx.seed, {0x62697274u, 0});
        double u = rng.u01();
        point x0 = point_conjugacy(F, G, point::on_circle(u), depth);
        empirical_measure mu;
        mu.space = phase_space::circle;
        mu.samples.reserve(static_cast<std::size_t>(n));
        double x = x0.x;
        for (long j = 0; j < n; ++j) {
            mu.samples.push_back(point::on_circle(x));
            x = F.circle_step(j, x);
        }
        std::vector<double> mass = mu.histogram(bins);
        csv_writer hist(ctx.path("histogram.csv"), {"bin_left", "mass"});
        for (int b = 0; b < bins; ++b)
            hist.row({static_cast<double>(b) / bins, mass[static_cast<std::size_t>(b)]});
        hist.close();
    }

    ctx.check_ge("avg_within_tolerance_fraction",
                 static_cast<double>(within) / static_cast<double>(starts), 0.95);
    ctx.check_le("ks_median", ks_median, 0.01);
    ctx.details["worst_avg"] = worst_avg;
    ctx.details["ks_max"] = ks_values.back();
}

// -- preset: periodic-measure ------------------------------------------------

inline void run_periodic_measure(const experiment_config& cfg, run_context& ctx) {
    const double amp = cfg.get_double("periodic", "amp", 0.05);
    const long n = cfg.get_long("periodic", "n", 1000000);
    const int grid = static_cast<int>(cfg.get_long("periodic", "grid", 4096));
    const long ref_points = cfg.get_long("periodic", "ref_points", 65536);
    const int bins = static_cast<int>(cfg.get_long("periodic", "bins", 256));

    map_seq F = map_seq::periodic(
        std::vector<circle_map>{doubling(), circle_map(2, {{amp, 1, 0.0}})});
    map_seq G = map_seq::constant(doubling());

    rng_stream rng(ctx.seed, {0x70657269u, 0});
    point x0 = point::on_circle(rng.u01());
    empirical_measure direct = orbit_measure(F, x0, n);

    std::vector<conjugacy_sample> h_list;
    for (long k = 0; k < F.period(); ++k)
        h_list.push_back(shifted_conjugacy(F, G, k, grid, 0, ctx.threads));
    empirical_measure mixture =
        periodic_limit_measure(h_list, reference_measure(phase_space::circle, ref_points));

    const double ks = measure_distance(direct, mixture);

    std::vector<double> dm = direct.histogram(bins), mm = mixture.histogram(bins);
    csv_writer hist(ctx.path("histogram.csv"), {"bin_left", "direct_mass", "mixture_mass"});
    for (int b = 0; b < bins; ++b)
        hist.row({static_cast<double>(b) / bins, dm[static_cast<std::size_t>(b)],
                  mm[static_cast<std::size_t>(b)]});
    hist.close();

    ctx.check_le("ks_direct_vs_mixture", ks, 0.02);
    for (std::size_t k = 0; k < h_list.size(); ++k)
        ctx.check_flag("h" + std::to_string(k) + "_homeomorphism",
                       h_list[k].homeomorphism_certified(), "grid lift strictly monotone");
    ctx.details["x0"] = x0.x;
    json hd = json::array();
    for (const auto& h : h_list) hd.push_back(h.sup_dist_to_identity());
    ctx.details["h_sup_dist"] = hd;
}

// -- preset: irregular-point -------------------------------------------------

inline void run_irregular_point(const experiment_config& cfg, run_context& ctx) {
    const long trace_len = cfg.get_long("irregular", "trace_len", 1000000);
    const long settle = cfg.get_long("irregular", "settle", 1000);
    const int depth = static_cast<int>(cfg.get_long("irregular", "depth", 25));
    const double amp = cfg.get_double("irregular", "amp", 0.02);
    const double phase = cfg.get_double("irregular", "phase", 0.4);
    const double exponent = cfg.get_double("irregular", "exponent", 1.6);

    observable phi = observable::cos1();
    irregular_probe probe = irregular_point(doubling(), phi, trace_len, settle);
    map_seq F = tail_sequence(amp, phase, exponent);
    transported_trace trans = transported_averages(F, probe, phi, depth);

    csv_writer base(ctx.path("base_trace.csv"), {"m", "running_avg"});
    for (const auto& [m, avg] : probe.trace) base.row({m, avg});
    base.close();
    csv_writer moved(ctx.path("transported_trace.csv"), {"m", "running_avg"});
    for (const auto& [m, avg] : trans.trace) moved.row({m, avg});
    moved.close();

    json blocks = json::array();
    long start = 0;
    for (const auto& b : probe.blocks) {
        blocks.push_back({{"start", start}, {"len", b.len}, {"pattern", b.pattern}});
        start += b.len;
    }
    write_text(ctx.path("blocks.json"), blocks.dump(2) + "\n");

    ctx.check_ge("base_limsup", probe.limsup, 0.9);
    ctx.check_le("base_liminf", probe.liminf, -0.4);
    ctx.check_le("transported_limsup_gap", std::fabs(trans.limsup - probe.limsup), 0.1);
    ctx.check_le("transported_liminf_gap", std::fabs(trans.liminf - probe.liminf), 0.1);
    ctx.check_le("transport_budget", trans.max_budget, 0.1);
    ctx.details["fixed_avg"] = probe.fixed_avg;
    ctx.details["cycle_avg"] = probe.cycle_avg;
    ctx.details["transported_limsup"] = trans.limsup;
    ctx.details["transported_liminf"] = trans.liminf;
    json cps = json::array();
    for (std::size_t i = 0; i < probe.checkpoints.size(); ++i)
        cps.push_back({{"m", probe.checkpoints[i]}, {"avg", probe.checkpoint_avg[i]}});
    ctx.details["checkpoints"] = cps;
}

// -- preset: entropy ---------------------------------------------------------

inline void write_entropy_csv(run_context& ctx, const std::string& name,
                              const entropy_report& rep) {
    csv_writer csv(ctx.path(name), {"epsilon", "n", "count", "slope"});
    for (std::size_t e = 0; e < rep.eps_schedule.size(); ++e)
        for (std::size_t k = 0; k < rep.n_schedule.size(); ++k)
            csv.row({rep.eps_schedule[e], static_cast<long>(rep.n_schedule[k]),
                     rep.counts[e][k], rep.slopes[e]});
    csv.close();
}

inline void run_entropy(const experiment_config& cfg, run_context& ctx) {
    const std::string parts = cfg.get_string("entropy", "parts", "doubling,cat,comparison");
    auto enabled = [&](const std::string& p) {
        return parts.find(p) != std::string::npos;
    };

    if (enabled("doubling")) {
        const long grid = cfg.get_long("entropy", "grid", 262144);
        const std::vector<double> eps =
            cfg.get_doubles("entropy", "eps", {0.125, 0.0625, 0.03125});
        std::vector<int> ns;
        for (long v : cfg.get_longs("entropy", "n", {6, 7, 8, 9, 10, 11}))
            ns.push_back(static_cast<int>(v));
        entropy_report rep = entropy_estimate(map_seq::constant(doubling()), eps, ns, grid);
        write_entropy_csv(ctx, "entropy_doubling.csv", rep);
        ctx.check_within("doubling_entropy", rep.estimate, 0.6931471805599453, 0.05);
        ctx.details["doubling_estimate"] = rep.estimate;
        ctx.details["doubling_error_bar"] = rep.error_bar;
    }

    if (enabled("cat")) {
        const long side = cfg.get_long("entropy", "cat_side", 3072);
        const std::vector<double> eps = cfg.get_doubles("entropy", "cat_eps", {0.125});
        std::vector<int> ns;
        for (long v : cfg.get_longs("entropy", "cat_n", {2, 3, 4, 5, 6}))
            ns.push_back(static_cast<int>(v));
        entropy_report rep = entropy_estimate(map_seq::constant(torus_map::cat()), eps, ns, side);
        write_entropy_csv(ctx, "entropy_cat.csv", rep);
        // log((3 + sqrt(5))/2), the unstable eigenvalue of the cat map.
        ctx.check_within("cat_entropy", rep.estimate, 0.9624236501192069, 0.10);
        ctx.details["cat_estimate"] = rep.estimate;
        ctx.details["cat_error_bar"] = rep.error_bar;
    }

    if (enabled("comparison")) {
        const double eps = cfg.get_double("entropy", "cmp_eps", 0.125);
        std::vector<int> ns;
        for (long v : cfg.get_longs("entropy", "cmp_n", {8, 9, 10, 11, 12}))
            ns.push_back(static_cast<int>(v));
        const double amp = cfg.get_double("entropy", "cmp_amp", 0.02);
        const double phase = cfg.get_double("entropy", "cmp_phase", 0.4);
        const double exponent = cfg.get_double("entropy", "cmp_exponent", 1.6);
        const long grid = cfg.get_long("entropy", "grid", 262144);

        map_seq F = tail_sequence(amp, phase, exponent);
        circle_map f = doubling();
        const int settle = settling_index(F, f, eps / 3.0);
        try {
            entropy_comparison_report rep = entropy_comparison(F, f, eps, ns, settle, grid);
            csv_writer csv(ctx.path("comparison.csv"),
                           {"n", "gated", "seq_fine", "limit_coarse", "limit_fine",
                            "seq_coarse", "forward_margin", "reciprocal_margin"});
            double fwd_min = 1e300, rec_min = 1e300;
            for (std::size_t k = 0; k < rep.n_schedule.size(); ++k) {
                bool gated = rep.n_schedule[k] >= rep.settle_index;
                csv.row({static_cast<long>(rep.n_schedule[k]),
                         std::string(gated ? "yes" : "no"), rep.seq_fine[k],
                         rep.limit_coarse[k], rep.limit_fine[k], rep.seq_coarse[k],
                         rep.forward_margin[k], rep.reciprocal_margin[k]});
                if (gated) {
                    fwd_min = std::min(fwd_min, rep.forward_margin[k]);
                    rec_min = std::min(rec_min, rep.reciprocal_margin[k]);
                }
            }
            csv.close();
            ctx.check_ge("tail_inequality_margin", fwd_min, 0.0);
            ctx.check_ge("tail_reciprocal_margin", rec_min, 0.0);
        } catch (const error& e) {
            ctx.check_error("tail_inequality_margin", e.what());
        }
        ctx.details["settle_index"] = settle;
    }
}

// -- preset: clt-asip --------------------------------------------------------

inline json clt_rows_json(const clt_report& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"n", r.n}, {"ks", r.ks}, {"p_value", r.p_value}});
    return rows;
}

inline void write_sums_csv(run_context& ctx, const std::string& name, const series_stats& st) {
    csv_writer csv(ctx.path(name), {"n", "member", "S_n"});
    for (std::size_t c = 0; c < st.checkpoints.size(); ++c)
        for (long m = 0; m < st.ensemble; ++m)
            csv.row({st.checkpoints[c], m, st.sums[c][static_cast<std::size_t>(m)]});
    csv.close();
}

inline void run_clt_asip(const experiment_config& cfg, run_context& ctx) {
    const long sigma_samples = cfg.get_long("clt", "sigma_samples", 4194304);
    const int lag = static_cast<int>(cfg.get_long("clt", "lag", 40));
    const long n = cfg.get_long("clt", "n", 65536);
    const long ensemble = cfg.get_long("clt", "ensemble", 2000);
    const double amp = cfg.get_double("clt", "amp", 0.05);
    const double phase = cfg.get_double("clt", "phase", 0.7);
    const double exponent = cfg.get_double("clt", "exponent", 1.6);
    const double drift_c = cfg.get_double("clt", "drift_c", 1.0);
    const double drift_eps = cfg.get_double("clt", "drift_eps", 0.1);
    const double drift_alpha = cfg.get_double("clt", "drift_alpha", 1.0);
    const long drift_n = cfg.get_long("clt", "drift_n", 65536);

    circle_map f = doubling();
    observable phi = observable::cos1();

    // Green-Kubo variance from the autocorrelation series.
    green_kubo_result gk = sigma_green_kubo(f, phi, sigma_samples, lag, ctx.seed);
    csv_writer lagcsv(ctx.path("lag_covariance.csv"), {"lag", "covariance"});
    for (int j = 0; j <= gk.lag_max; ++j)
        lagcsv.row({static_cast<long>(j), gk.lag_cov[static_cast<std::size_t>(j)]});
    lagcsv.close();
    ctx.check_within("sigma2_doubling_cos", gk.sigma2, 0.5, 0.01);
    ctx.details["sigma2"] = gk.sigma2;
    ctx.details["sigma2_se"] = gk.sigma2_se;

    // Normality at the declared variance: constant sequence.
    series_stats st_const =
        partial_sum_ensemble(map_seq::constant(f), phi, n, ensemble, ctx.seed, ctx.threads);
    clt_report rep_const = clt_check(st_const, gk.sigma2);
    write_sums_csv(ctx, "sums_constant.csv", st_const);
    ctx.check_ge("clt_constant_p", rep_const.rows.back().p_value, 0.01);
    ctx.details["clt_constant"] = clt_rows_json(rep_const);

    // Admissible-rate convergent tail.
    map_seq T = tail_sequence(amp, phase, exponent);
    series_stats st_tail = partial_sum_ensemble(T, phi, n, ensemble, ctx.seed, ctx.threads);
    clt_report rep_tail = clt_check(st_tail, gk.sigma2);
    write_sums_csv(ctx, "sums_tail.csv", st_tail);
    ctx.check_ge("clt_tail_p", rep_tail.rows.back().p_value, 0.01);
    ctx.check_flag("tail_rate_admissible", st_tail.rate_checked,
                   "declared decay satisfies the square-root budget");
    ctx.details["clt_tail"] = clt_rows_json(rep_tail);

    // Coboundary: declared variance ~ 0, ensemble must collapse.
    observable cob = observable::doubling_coboundary();
    green_kubo_result gk_cob = sigma_green_kubo(f, cob, sigma_samples, lag, ctx.seed);
    series_stats st_cob =
        partial_sum_ensemble(map_seq::constant(f), cob, n, ensemble, ctx.seed, ctx.threads);
    write_sums_csv(ctx, "sums_coboundary.csv", st_cob);
    try {
        clt_report rep_cob = clt_check(st_cob, gk_cob.sigma2);
        ctx.check_le("coboundary_variance", rep_cob.final_variance, 0.05);
    } catch (const error& e) {
        ctx.check_error("coboundary_variance", e.what());
    }
    ctx.details["sigma2_coboundary"] = gk_cob.sigma2;

    // Rate-schedule drift budget.
    rate_schedule_report rs = asip_rate_schedule(drift_c, drift_eps, drift_alpha, drift_n);
    csv_writer drift(ctx.path("drift.csv"), {"n", "drift"});
    for (std::size_t i = 0; i < rs.checkpoints.size(); ++i)
        drift.row({rs.checkpoints[i], rs.drift[i]});
    drift.close();
    ctx.check_within("drift_exponent", rs.fitted_exponent, 0.5 - drift_eps, 0.05);
    ctx.details["drift_fitted_c"] = rs.fitted_c;
    ctx.details["drift_boundary_case"] = rs.boundary_case;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& preset_names() { return detail::preset_names(); }

inline std::string describe_preset(const std::string& preset) {
    if (preset == "shadowing-lipschitz")
        return "shadowing-lipschitz: shadows seeded noisy pseudo-orbits of an expanding\n"
               "circle family or a hyperbolic torus family and certifies the tracing bound.\n"
               "Knobs: [shadowing] family (doubling | perturbed-doubling | cat | perturbed-cat,\n"
               "default doubling), amp (perturbation amplitude, default 0.05 circle / 0.01\n"
               "torus), deltas (noise schedule, default 1e-2,1e-3,1e-4 circle /\n"
               "1e-3,5e-4,2.5e-4 torus), trials (default 100), len (default 500).\n"
               "Outputs: shadowing.csv (delta, trial, beta, iterations, certified) and the\n"
               "summary with per-delta max beta, the fitted log-log Lipschitz slope (target\n"
               "1.0), and uniqueness certificates (expansiveness scale / solver restart gap).";
    if (preset == "conjugacy-residual")
        return "conjugacy-residual: builds the sequential conjugacy between the doubling\n"
               "map and a perturbed expanding map (constant sequences) by pullback shadowing\n"
               "and measures the defect of the intertwining relation across shifts, plus\n"
               "agreement with the independent symbolic itinerary construction.\n"
               "Knobs: [conjugacy] amp (default 0.05), grid (default 4096), n_max (shift\n"
               "range, default 20), depth (pullback truncation, default 40), oracle_points\n"
               "(default 1024).\n"
               "Outputs: conjugacy_sample.csv (grid_x, image_x), oracle.csv (x, diff),\n"
               "summary with relation residual, oracle max difference, sup distance to the\n"
               "identity, monotonicity certificate.";
    if (preset == "quasi-conjugacy")
        return "quasi-conjugacy: three linked measurements on expanding circle sequences.\n"
               "(1) proximity: conjugacy distance to the identity scales linearly in the\n"
               "perturbation amplitude with a single constant (ratio spread < 2x);\n"
               "(2) geometric tail: shifted conjugacies of a convergent-tail sequence\n"
               "approach the identity monotonically at the declared decay rate;\n"
               "(3) defect: a single homeomorphism quasi-intertwines a periodic sequence\n"
               "with the doubling sequence, defect within the two-sided certified bound.\n"
               "Knobs: [quasi] amp_schedule (default 0.04,0.02,0.01), defect_schedule\n"
               "(default 0.02,0.01), grid (default 4096), tail_ratio (default 0.5),\n"
               "tail_k_max (default 14), tail_k_gate (default 12), tail_tol (default 1e-4),\n"
               "tail_lead_amp (default 0.1).\n"
               "Outputs: proximity.csv, tail.csv, defect.csv, summary verdicts.";
    if (preset == "birkhoff-stability")
        return "birkhoff-stability: ergodic stability of Birkhoff averages along a\n"
               "convergent-tail doubling sequence. Starts are sampled from the pushforward\n"
               "of Lebesgue under the sequence conjugacy; each orbit's time average of\n"
               "cos(2 pi x) and its empirical-measure KS distance to Lebesgue are recorded.\n"
               "Knobs: [birkhoff] amp (default 0.05), phase (default 0.7), exponent (decay\n"
               "power, default 1.6), starts (default 200), n (orbit length, default 1e6),\n"
               "depth (conjugacy pullback, default 40), ref_points (default 65536), bins\n"
               "(histogram, default 256).\n"
               "Outputs: starts.csv (start, u, x0, avg, ks), histogram.csv (bin_left, mass),\n"
               "summary with the in-tolerance fraction and the KS median.";
    if (preset == "periodic-measure")
        return "periodic-measure: limit measure of an alternating (period-2) expanding\n"
               "sequence. Compares the direct orbit empirical measure against the mixture\n"
               "of conjugacy pushforwards of Lebesgue, one per shift class.\n"
               "Knobs: [periodic] amp (default 0.05), n (orbit length, default 1e6), grid\n"
               "(conjugacy resolution, default 4096), ref_points (default 65536), bins\n"
               "(default 256).\n"
               "Outputs: histogram.csv (bin_left, direct_mass, mixture_mass), summary with\n"
               "the KS distance between direct and mixture measures.";
    if (preset == "irregular-point")
        return "irregular-point: digit-program construction of a point whose Birkhoff\n"
               "averages oscillate forever (limsup near the fixed-point value, liminf near\n"
               "the period-2 cycle value), evaluated exactly via the binary digit tape; the\n"
               "same tape is transported through a convergent-tail sequence by pullback and\n"
               "the oscillation gap is certified to survive within the transport budget.\n"
               "Knobs: [irregular] trace_len (default 1e6), settle (default 1000), depth\n"
               "(transport pullback, default 25), amp / phase / exponent (tail sequence,\n"
               "defaults 0.02 / 0.4 / 1.6).\n"
               "Outputs: base_trace.csv and transported_trace.csv (m, running_avg),\n"
               "blocks.json (run-length digit program), summary with limsup / liminf /\n"
               "transport budget.";
    if (preset == "entropy")
        return "entropy: separated-set counting over eps/n schedules. Parts: 'doubling'\n"
               "(greedy (n, eps)-separated counts on a dyadic grid, slope of log count vs n\n"
               "estimates the entropy, target log 2), 'cat' (torus analogue, target the log\n"
               "of the unstable eigenvalue), 'comparison' (scale-matched count inequalities\n"
               "between a convergent-tail sequence and its limit map at matched scales\n"
               "eps/3 vs eps, gated beyond the measured settling index).\n"
               "Knobs: [entropy] parts (default doubling,cat,comparison), grid (default\n"
               "262144), eps / n (doubling schedules), cat_side / cat_eps / cat_n,\n"
               "cmp_eps / cmp_n / cmp_amp / cmp_phase / cmp_exponent.\n"
               "Outputs: entropy_doubling.csv, entropy_cat.csv (epsilon, n, count, slope),\n"
               "comparison.csv (per-n counts and margins), summary estimates + error bars.";
    if (preset == "clt-asip")
        return "clt-asip: distributional limit statistics for Birkhoff sums, the numerical\n"
               "side of the central limit theorem and the ASIP (almost sure invariance\n"
               "principle) for sequential expanding maps. Computes the Green-Kubo variance\n"
               "sigma^2 from the autocorrelation series of cos(2 pi x) under doubling\n"
               "(target 1/2), checks KS normality of S_n / (sigma sqrt n) at dyadic\n"
               "checkpoints for the constant sequence and for an admissible-rate\n"
               "convergent tail, verifies variance collapse for the exact coboundary\n"
               "observable, and fits the ASIP rate-schedule drift budget D_n ~ n^(1/2-eps).\n"
               "Knobs: [clt] sigma_samples (default 2^22), lag (default 40), n (default\n"
               "2^16), ensemble (default 2000), amp / phase / exponent (tail, defaults\n"
               "0.05 / 0.7 / 1.6), drift_c / drift_eps / drift_alpha / drift_n (defaults\n"
               "1.0 / 0.1 / 1.0 / 65536).\n"
               "Outputs: lag_covariance.csv, sums_constant.csv, sums_tail.csv,\n"
               "sums_coboundary.csv (n, member, S_n), drift.csv, summary with sigma^2,\n"
               "per-checkpoint KS p-values, collapse variance, drift fit exponent.";
    detail::unknown_preset(preset);
}

inline run_result run_experiment(const experiment_config& cfg, const run_options& opt = {}) {
    const std::string preset = cfg.get_string("experiment", "preset", "");
    require(!preset.empty(), errc::config_parse, "config: [experiment] preset is required");
    cfg.validate(detail::preset_schema(preset));

    detail::run_context ctx;
    ctx.seed = opt.seed ? *opt.seed : cfg.get_u64("experiment", "seed", 1);
    ctx.threads = std::max(1, opt.threads);
    ctx.out = opt.out_dir ? *opt.out_dir : cfg.get_string("experiment", "out", "out");
    std::filesystem::create_directories(ctx.out);

    if (preset == "shadowing-lipschitz")
        detail::run_shadowing(cfg, ctx);
    else if (preset == "conjugacy-residual")
        detail::run_conjugacy_residual(cfg, ctx);
    else if (preset == "quasi-conjugacy")
        detail::run_quasi_conjugacy(cfg, ctx);
    else if (preset == "birkhoff-stability")
        detail::run_birkhoff(cfg, ctx);
    else if (preset == "periodic-measure")
        detail::run_periodic_measure(cfg, ctx);
    else if (preset == "irregular-point")
        detail::run_irregular_point(cfg, ctx);
    else if (preset == "entropy")
        detail::run_entropy(cfg, ctx);
    else if (preset == "clt-asip")
        detail::run_clt_asip(cfg, ctx);
    else
        detail::unknown_preset(preset);

    run_result res;
    res.preset = preset;
    res.checks = ctx.checks;
    res.pass = std::all_of(ctx.checks.begin(), ctx.checks.end(),
                           [](const check_result& c) { return c.pass; });

    json summary;
    summary["preset"] = preset;
    summary["version"] = version_string;
    summary["config_hash"] = hex64(fnv1a64(cfg.canonical()));
    summary["seed"] = ctx.seed;
    summary["pass"] = res.pass;
    json checks = json::array();
    json failed = json::array();
    for (const auto& c : ctx.checks) {
        json jc;
        jc["name"] = c.name;
        if (std::isnan(c.measured))
            jc["measured"] = nullptr;
        else
            jc["measured"] = c.measured;
        jc["tolerance"] = c.tolerance;
        jc["verdict"] = c.pass ? "pass" : "fail";
        checks.push_back(jc);
        if (!c.pass) failed.push_back(c.name);
    }
    summary["checks"] = checks;
    summary["failed_checks"] = failed;
    for (auto& [k, v] : ctx.details.items()) summary[k] = v;
    summary["artifacts"] = ctx.artifacts;

    write_text(ctx.out / "summary.json", summary.dump(2) + "\n");
    res.artifacts = ctx.artifacts;
    res.artifacts.push_back("summary.json");
    res.summary = std::move(summary);
    return res;
}

} // namespace seqdyn
