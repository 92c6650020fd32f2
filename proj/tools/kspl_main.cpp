#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "kspl/config.hpp"
#include "kspl/error.hpp"
#include "kspl/experiments.hpp"
#include "kspl/log.hpp"
#include "kspl/parallel.hpp"
#include "kspl/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kspl: deep Kolmogorov regression and deep splitting solvers for "
                 "high-dimensional heat equations"};
    app.set_version_flag("--version", std::string(kspl::kToolkitVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "path to the experiment config JSON")->required();
    run->add_option("--out", out_override, "output directory (overrides config)");
    run->add_option("--seed", seed_override, "seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });
    run->add_option("--threads", threads, "cap worker threads (results are unchanged)");

    CLI::App* catalog = app.add_subcommand("catalog", "list registered phi and f entries");

    CLI11_PARSE(app, argc, argv);

    try {
        if (catalog->parsed()) {
            kspl::print_catalog();
            return 0;
        }
        if (threads > 0) kspl::set_max_threads(threads);
        kspl::ExperimentConfig cfg = kspl::ExperimentConfig::load(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_given) {
            // reparse with the new seed so plans and stream contexts pick it up
            nlohmann::json j = cfg.resolved_json();
            j["seed"] = seed_override;
            cfg = kspl::ExperimentConfig::parse(j);
            if (!out_override.empty()) cfg.out_dir = out_override;
        }
        kspl::log_info("running " + kspl::to_string(cfg.kind) + " -> " + cfg.out_dir);
        return kspl::run_experiment(cfg);
    } catch (const kspl::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const kspl::NumericError& e) {
        std::fprintf(stderr, "numerical guard: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
