#include <iostream>

#include <CLI11.hpp>

#include "daestab/runner.hpp"

using namespace daestab;

int main(int argc, char** argv) {
    CLI::App app{"DAE transient stability toolkit: CCT, instability mechanisms and "
                 "closed-form CCT sensitivities"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    double t_cl = 0.0;

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        auto* opt = cmd->add_option("--config", config_path, "INI configuration file");
        if (need_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        cmd->add_option("--workers", workers, "parallel sweep workers");
    };

    auto* run_cmd = app.add_subcommand("run", "simulate one fault and export the trajectory");
    add_common(run_cmd, true);
    run_cmd->add_option("--tcl", t_cl, "fault clearing time")->required();

    auto* sweep_cmd =
        app.add_subcommand("sweep", "parameter sweep with sensitivity-vs-oracle comparison");
    add_common(sweep_cmd, true);

    auto* portrait_cmd = app.add_subcommand("portrait", "phase-portrait dataset export");
    add_common(portrait_cmd, true);

    auto* systems_cmd = app.add_subcommand("systems", "built-in system catalog");
    auto* list_cmd = systems_cmd->add_subcommand("list", "list catalog entries");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            write_systems_list(std::cout);
            return 0;
        }
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (workers > 0) cfg.workers = workers;

        if (run_cmd->parsed()) return run_single(cfg, t_cl, std::cout);
        if (portrait_cmd->parsed()) return run_portrait(cfg, std::cout);
        if (sweep_cmd->parsed()) {
            const SweepOutcome out = run_sweep(cfg);
            std::cout << out.summary << "\n";
            return out.exit_code;
        }
        std::cerr << "unknown subcommand\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
