#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace sqkd::cli;

    CLI::App app{"Phase-encoded single-state SQKD simulator"};
    app.require_subcommand(1);

    RunOptions opts;
    std::string config;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::vector<double> epsilons;
    double target = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Overrides the config seed");
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        sub->add_option("--threads,--shards", opts.threads, "Worker threads; results do not depend on it")
            ->check(CLI::Range(1u, 256u))
            ->capture_default_str();
    };

    auto* simulate = app.add_subcommand("simulate", "Run a protocol session");
    auto* attack = app.add_subcommand("attack-eval", "Exact and Monte-Carlo evaluation of the configured attack");
    auto* sweep = app.add_subcommand("robustness-sweep", "Best Eve information per error budget");
    auto* calibrate = app.add_subcommand("calibrate", "Fit the visibility to a target contrast");
    for (auto* sub : {simulate, attack, sweep, calibrate}) common(sub);
    sweep->add_option("--epsilons", epsilons, "Error budgets in [0, 0.5]")->delimiter(',');
    calibrate->add_option("--target", target, "Target matched-basis contrast in (0, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    opts.config = config;
    opts.out_dir = out_dir;
    for (auto* sub : {simulate, attack, sweep, calibrate}) {
        if (sub->count("--seed") > 0) opts.seed = seed;
    }
    if (sweep->count("--epsilons") > 0) opts.epsilons = epsilons;
    if (calibrate->count("--target") > 0) opts.target_contrast = target;

    if (*simulate) return cmd_simulate(opts, std::cout, std::cerr);
    if (*attack) return cmd_attack_eval(opts, std::cout, std::cerr);
    if (*sweep) return cmd_robustness_sweep(opts, std::cout, std::cerr);
    return cmd_calibrate(opts, std::cout, std::cerr);
}
