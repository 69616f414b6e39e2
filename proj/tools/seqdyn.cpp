#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "seqdyn/runner.hpp"

namespace {

/// Exit statuses: 0 all checks pass, 1 experiment failure, 2 config error.
constexpr int exit_pass = 0;
constexpr int exit_experiment = 1;
constexpr int exit_config = 2;

int cmd_run(const std::string& config_path, int threads, const std::string& out_override) {
    seqdyn::experiment_config cfg;
    try {
        cfg = seqdyn::experiment_config::parse(seqdyn::read_text(config_path));
    } catch (const seqdyn::error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return exit_config;
    }

    seqdyn::run_options opt;
    opt.threads = threads;
    if (!out_override.empty()) opt.out_dir = out_override;
    if (const char* env = std::getenv("SEQDYN_SEED")) {
        try {
            opt.seed = std::stoull(env);
        } catch (...) {
            std::fprintf(stderr, "SEQDYN_SEED is not an unsigned integer: %s\n", env);
            return exit_config;
        }
    }

    try {
        seqdyn::run_result res = seqdyn::run_experiment(cfg, opt);
        for (const auto& c : res.checks)
            std::printf("[%s] %s  measured %s  (%s)\n", c.pass ? "pass" : "FAIL",
                        c.name.c_str(), seqdyn::format_double(c.measured).c_str(),
                        c.tolerance.c_str());
        std::printf("%s: %s\n", res.preset.c_str(), res.pass ? "pass" : "FAIL");
        return res.pass ? exit_pass : exit_experiment;
    } catch (const seqdyn::error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return e.code() == seqdyn::errc::config_parse ? exit_config : exit_experiment;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqdyn: sequential-dynamics experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_override, preset;
    int threads = 1;

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "path to the INI config")->required();
    run->add_option("--threads", threads, "worker thread count (outputs are identical for any value)");
    run->add_option("--out", out_override, "output directory (overrides the config)");

    CLI::App* describe = app.add_subcommand("describe", "print what a preset measures");
    describe->add_option("preset", preset, "preset name")->required();

    app.add_subcommand("list", "list the available presets");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, threads, out_override);
    if (describe->parsed()) {
        try {
            std::printf("%s\n", seqdyn::describe_preset(preset).c_str());
            return exit_pass;
        } catch (const seqdyn::error& e) {
            std::fprintf(stderr, "%s\n", e.what());
            return exit_config;
        }
    }
    for (const auto& n : seqdyn::preset_names()) std::printf("%s\n", n.c_str());
    return exit_pass;
}
