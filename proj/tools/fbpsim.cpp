#include <algorithm>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "fbpsim/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fbpsim: forward-backward parabolic simulations with non-smooth rate regularization"};
    app.require_subcommand(1);

    fbpsim::CommandOptions opt;
    std::string config, out;
    int workers = 0, subsample = 0;
    std::vector<CLI::Option*> workers_opts, subsample_opts;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config, "scenario file (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        workers_opts.push_back(sub->add_option("--workers", workers, "worker threads for sweeps (env FBPSIM_WORKERS)"));
        subsample_opts.push_back(sub->add_option("--subsample", subsample, "store every K-th snapshot"));
        sub->add_flag("--quiet", opt.quiet, "no summary on stdout");
    };
    auto* run = app.add_subcommand("run", "simulate one scenario");
    auto* sweep = app.add_subcommand("sweep", "run a matrix of scenarios");
    auto* hyst = app.add_subcommand("hysteresis", "slow-driving ladder against the stop operator");
    auto* check = app.add_subcommand("check", "recompute diagnostics of a stored run");
    common(run, true);
    common(sweep, true);
    common(hyst, true);
    common(check, false);
    std::string dir;
    check->add_option("dir", dir, "run directory (same as --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
        return 64;
    }

    try {
        opt.config = config;
        if (!out.empty()) opt.out = out;
        if (!dir.empty()) opt.out = dir;
        auto given = [](const std::vector<CLI::Option*>& v) {
            return std::any_of(v.begin(), v.end(), [](const CLI::Option* o) { return o->count() > 0; });
        };
        if (given(workers_opts)) opt.workers = workers;
        if (given(subsample_opts)) opt.subsample = subsample;
        if (*run) return fbpsim::cmd_run(opt);
        if (*sweep) return fbpsim::cmd_sweep(opt);
        if (*hyst) return fbpsim::cmd_hysteresis(opt);
        return fbpsim::cmd_check(opt);
    } catch (const std::exception& e) {
        std::cerr << fbpsim::error_json(e).dump() << "\n";
        return 1;
    }
}
