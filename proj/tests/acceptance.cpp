// End-to-end acceptance gate.  Runs every bundled experiment config through
// the library runner, then scores eleven fixed criteria with the tolerances
// pinned below -- one verdict line per criterion, exit 0 only if all pass.
//
// The final criterion reruns every config on four threads into a second
// directory and requires byte-identical artifacts, so the whole pipeline is
// checked for run-to-run and thread-count determinism, not just correctness.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "seqdyn/config.hpp"
#include "seqdyn/io.hpp"
#include "seqdyn/runner.hpp"

namespace {

using namespace seqdyn;

std::string g_config_dir = SEQDYN_CONFIG_DIR;

struct preset_run {
    std::string stem;       // config file stem under configs/
    bool ran = false;
    std::string error;      // nonempty when the run threw
    run_result result;
    double wall_s = 0.0;
};

experiment_config load_config(const std::string& stem) {
    return experiment_config::parse(read_text(std::filesystem::path(g_config_dir) / (stem + ".ini")));
}

preset_run run_preset(const std::string& stem, const std::string& out_root, int threads) {
    preset_run pr;
    pr.stem = stem;
    run_options opt;
    opt.out_dir = out_root + "/" + stem;
    opt.seed = 42;
    opt.threads = threads;
    auto t0 = std::chrono::steady_clock::now();
    try {
        pr.result = run_experiment(load_config(stem), opt);
        pr.ran = true;
    } catch (const std::exception& e) {
        pr.error = e.what();
    }
    pr.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return pr;
}

double measured(const preset_run& pr, const std::string& name) {
    for (const auto& c : pr.result.checks)
        if (c.name == name) return c.measured;
    return std::numeric_limits<double>::quiet_NaN();
}

/// One acceptance criterion: collects named comparisons against pinned
/// bounds, then prints a single verdict line (details only on failure).
class criterion {
public:
    criterion(int id, std::string label) : id_(id), label_(std::move(label)) {}

    void le(const std::string& what, double value, double bound) {
        record(value <= bound, what, value, "<= " + format_double(bound));
    }
    void ge(const std::string& what, double value, double bound) {
        record(value >= bound, what, value, ">= " + format_double(bound));
    }
    void gt(const std::string& what, double value, double bound) {
        record(value > bound, what, value, "> " + format_double(bound));
    }
    void within(const std::string& what, double value, double target, double tol) {
        record(std::fabs(value - target) <= tol, what, value,
               format_double(target) + " +- " + format_double(tol));
    }
    void flag(const std::string& what, bool ok) { record(ok, what, ok ? 1.0 : 0.0, "true"); }
    void wall(const preset_run& pr, double budget_s) {
        record(pr.ran && pr.wall_s < budget_s, pr.stem + " wall time [s]", pr.wall_s,
               "< " + format_double(budget_s));
        if (!pr.ran) note(pr.stem + " run failed: " + pr.error);
    }
    void note(const std::string& msg) {
        pass_ = false;
        notes_.push_back(msg);
    }

    bool finish() const {
        std::printf("[%2d] %s  %s\n", id_, pass_ ? "PASS" : "FAIL", label_.c_str());
        for (const auto& n : notes_) std::printf("        %s\n", n.c_str());
        return pass_;
    }

private:
    void record(bool ok, const std::string& what, double value, const std::string& bound) {
        if (ok) return;
        pass_ = false;
        notes_.push_back(what + ": measured " + format_double(value) + ", required " + bound);
    }

    int id_;
    std::string label_;
    bool pass_ = true;
    std::vector<std::string> notes_;
};

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_config_dir = argv[1];

    const std::vector<std::string> stems = {
        "shadowing-doubling", "shadowing-cat",    "conjugacy-residual",
        "quasi-conjugacy",    "birkhoff-stability", "periodic-measure",
        "irregular-point",    "entropy",          "clt-asip"};

    std::printf("running %zu experiment configs from %s\n", stems.size(), g_config_dir.c_str());
    std::map<std::string, preset_run> runs;
    for (const auto& stem : stems) {
        runs[stem] = run_preset(stem, "acceptance_out", 1);
        const preset_run& pr = runs[stem];
        std::printf("  %-20s %s  (%.1f s)\n", stem.c_str(),
                    pr.ran ? (pr.result.pass ? "ok" : "checks failed") : "error", pr.wall_s);
        std::fflush(stdout);
    }

    int passed = 0, total = 0;
    auto score = [&](const criterion& c) {
        ++total;
        if (c.finish()) ++passed;
    };

    {
        const preset_run& pr = runs.at("shadowing-doubling");
        criterion c(1, "expanding-family shadows stay within the geometric tracing bound");
        // lambda/(1-lambda) = 1 for the doubling family, so the bound is delta itself.
        for (double delta : {1e-2, 1e-3, 1e-4})
            c.le("max beta at delta=" + format_double(delta),
                 measured(pr, "beta_bound_delta_" + format_double(delta)), delta + 1e-9);
        c.le("failed shadow fraction", measured(pr, "shadow_failures"), 0.0);
        c.ge("certified fraction", measured(pr, "certified_fraction"), 1.0);
        c.wall(pr, 10.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("shadowing-cat");
        criterion c(2, "hyperbolic torus shadows scale linearly and certify uniqueness");
        c.within("log-log slope of beta vs delta", measured(pr, "lipschitz_slope"), 1.0, 0.1);
        c.ge("restart-certified fraction", measured(pr, "certified_fraction"), 1.0);
        c.le("failed shadow fraction", measured(pr, "shadow_failures"), 0.0);
        c.wall(pr, 60.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("conjugacy-residual");
        criterion c(3, "conjugacy relation residual and symbolic oracle agree to 1e-6");
        c.le("relation residual over all shifts", measured(pr, "relation_residual"), 1e-6);
        c.le("max difference to itinerary oracle", measured(pr, "oracle_max_diff"), 1e-6);
        c.flag("monotone homeomorphism certificate",
               measured(pr, "homeomorphism_certified") == 1.0);
        c.wall(pr, 30.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("quasi-conjugacy");
        criterion c(4, "identity proximity scales linearly; shifted tail settles below 1e-4");
        c.le("proximity ratio spread", measured(pr, "proximity_ratio_spread"), 2.0);
        c.flag("tail sup-distance strictly decreasing", measured(pr, "tail_monotone") == 1.0);
        c.le("tail sup-distance at shift 12", measured(pr, "tail_supdist_k12"), 1e-4);
        if (!pr.ran) c.note("quasi-conjugacy run failed: " + pr.error);
        score(c);
    }
    {
        const preset_run& pr = runs.at("quasi-conjugacy");
        criterion c(5, "quasi-conjugacy defect stays within the two-sided bound 2*eps");
        for (double eps : {0.02, 0.01})
            c.le("defect at eps=" + format_double(eps),
                 measured(pr, "quasi_defect_eps_" + format_double(eps)), 2.0 * eps);
        c.wall(pr, 30.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("birkhoff-stability");
        criterion c(6, "Birkhoff averages over conjugated starts concentrate at zero");
        c.ge("fraction of averages within 0.01",
             measured(pr, "avg_within_tolerance_fraction"), 0.95);
        c.le("median KS distance to Lebesgue", measured(pr, "ks_median"), 0.01);
        c.wall(pr, 120.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("periodic-measure");
        criterion c(7, "alternating-sequence orbit measure matches the conjugacy mixture");
        c.le("KS direct vs mixture", measured(pr, "ks_direct_vs_mixture"), 0.02);
        c.flag("shift-0 homeomorphism certificate", measured(pr, "h0_homeomorphism") == 1.0);
        c.flag("shift-1 homeomorphism certificate", measured(pr, "h1_homeomorphism") == 1.0);
        c.wall(pr, 120.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("irregular-point");
        criterion c(8, "irregular point keeps its oscillation gap, also after transport");
        c.ge("base limsup", measured(pr, "base_limsup"), 0.9);
        c.le("base liminf", measured(pr, "base_liminf"), -0.4);
        c.le("limsup transport gap", measured(pr, "transported_limsup_gap"), 0.1);
        c.le("liminf transport gap", measured(pr, "transported_liminf_gap"), 0.1);
        c.le("transport budget", measured(pr, "transport_budget"), 0.1);
        c.wall(pr, 60.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("entropy");
        criterion c(9, "entropy estimates hit their targets; matched-scale counts dominate");
        c.within("doubling entropy", measured(pr, "doubling_entropy"), 0.6931471805599453, 0.05);
        c.within("torus entropy", measured(pr, "cat_entropy"), 0.9624236501192069, 0.10);
        c.ge("min forward count margin", measured(pr, "tail_inequality_margin"), 0.0);
        c.ge("min reciprocal count margin", measured(pr, "tail_reciprocal_margin"), 0.0);
        c.wall(pr, 180.0);
        score(c);
    }
    {
        const preset_run& pr = runs.at("clt-asip");
        criterion c(10, "limit statistics: variance, normality, collapse, drift exponent");
        c.within("Green-Kubo sigma^2", measured(pr, "sigma2_doubling_cos"), 0.5, 0.01);
        c.gt("KS p-value, constant sequence", measured(pr, "clt_constant_p"), 0.01);
        c.gt("KS p-value, admissible tail", measured(pr, "clt_tail_p"), 0.01);
        c.flag("tail rate admissible", measured(pr, "tail_rate_admissible") == 1.0);
        c.le("coboundary collapse variance", measured(pr, "coboundary_variance"), 0.05);
        c.within("drift budget exponent", measured(pr, "drift_exponent"), 0.4, 0.05);
        c.wall(pr, 180.0);
        score(c);
    }
    {
        criterion c(11, "reruns on four threads reproduce every artifact byte for byte");
        for (const auto& stem : stems) {
            const preset_run& first = runs.at(stem);
            if (!first.ran) {
                c.note(stem + ": first run failed, nothing to compare");
                continue;
            }
            preset_run redo = run_preset(stem, "acceptance_out_alt", 4);
            if (!redo.ran) {
                c.note(stem + ": rerun failed: " + redo.error);
                continue;
            }
            for (const auto& name : first.result.artifacts) {
                std::filesystem::path a =
                    std::filesystem::path("acceptance_out") / stem / name;
                std::filesystem::path b =
                    std::filesystem::path("acceptance_out_alt") / stem / name;
                try {
                    if (read_text(a) != read_text(b))
                        c.note(stem + "/" + name + ": contents differ between runs");
                } catch (const std::exception& e) {
                    c.note(stem + "/" + name + ": " + e.what());
                }
            }
        }
        score(c);
    }

    std::printf("acceptance: %d/%d criteria passed\n", passed, total);
    return passed == total ? 0 : 1;
}
