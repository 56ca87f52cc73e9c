// hjsys: solve weakly coupled Hamilton-Jacobi systems on the torus and run
// the associated diagnostics. Subcommands mirror the library modules:
//
//   hjsys analyze-coupling --scenario s.json [--out DIR]
//   hjsys evolve           --scenario s.json [--out DIR] [--grid N] [--horizon T]
//   hjsys ergodic          --scenario s.json ...
//   hjsys longtime         --scenario s.json ...
//   hjsys control          --scenario s.json ...
//   hjsys gallery NAME     [--out DIR] [--dump-scenario]
//
// The HJSYS_OUT environment variable overrides --out. Exit status is zero
// iff the run completed and every assertion in report.json passed.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hjsys/gallery.hpp"

namespace {

struct CommonOptions {
    std::string scenario_path;
    std::string out;
    int grid = 0;
    double horizon = 0.0;
    long seed = -1;
    int threads = 0;
    bool shift_costs = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_scenario) {
    if (needs_scenario)
        cmd->add_option("--scenario", opts.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", opts.out, "output directory (overrides the scenario)");
    cmd->add_option("--grid", opts.grid, "grid cells per axis");
    cmd->add_option("--horizon", opts.horizon, "time horizon");
    cmd->add_option("--seed", opts.seed, "seed for randomized data and paths");
    cmd->add_option("--threads", opts.threads, "worker thread cap");
    if (needs_scenario)
        cmd->add_flag("--shift-costs", opts.shift_costs,
                      "subtract the shared cost minimum before running");
}

void apply_overrides(hjsys::cli::Scenario& scenario, const CommonOptions& opts,
                     const std::string& command) {
    scenario.run.command = command;
    if (opts.grid > 0) scenario.run.grid_n = opts.grid;
    if (opts.horizon > 0.0) scenario.run.horizon = opts.horizon;
    if (opts.seed >= 0) scenario.run.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.threads > 0) scenario.run.threads = opts.threads;
    if (!opts.out.empty()) scenario.run.out = opts.out;
    if (const char* env = std::getenv("HJSYS_OUT")) scenario.run.out = env;
    hjsys::set_max_threads(scenario.run.threads);
}

int run_with_scenario(const CommonOptions& opts, const std::string& command) {
    auto scenario = hjsys::cli::load_scenario(opts.scenario_path);
    apply_overrides(scenario, opts, command);
    if (opts.shift_costs) scenario = hjsys::cli::shift_costs_preprocessor(scenario);
    for (const auto& w : scenario.warnings) std::cerr << "[audit warning] " << w << "\n";
    const auto art = hjsys::cli::run_scenario(scenario);
    std::cout << art.report.dump(2) << "\n";
    return art.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weakly coupled Hamilton-Jacobi systems on the torus"};
    app.require_subcommand(1);

    std::map<std::string, CommonOptions> opts;
    for (const char* name : {"analyze-coupling", "evolve", "ergodic", "longtime", "control"}) {
        auto* cmd = app.add_subcommand(name);
        add_common(cmd, opts[name], true);
    }

    CommonOptions gallery_opts;
    std::string gallery_name;
    bool dump_scenario = false;
    auto* gallery = app.add_subcommand("gallery", "run a named reproduction scenario");
    gallery->add_option("name", gallery_name, "one of: ex49, ex56, scalar-nr, two-well, control-xval")
        ->required();
    gallery->add_flag("--dump-scenario", dump_scenario, "print the scenario JSON and exit");
    add_common(gallery, gallery_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& [name, o] : opts)
            if (app.got_subcommand(name)) return run_with_scenario(o, name);

        if (app.got_subcommand("gallery")) {
            auto scenario = hjsys::cli::gallery_scenario(gallery_name);
            if (dump_scenario) {
                std::cout << hjsys::cli::scenario_to_json(scenario).dump(2) << "\n";
                return 0;
            }
            apply_overrides(scenario, gallery_opts, scenario.run.command);
            for (const auto& w : scenario.warnings) std::cerr << "[audit warning] " << w << "\n";
            const auto art = hjsys::cli::run_gallery(gallery_name, scenario);
            std::cout << art.report.dump(2) << "\n";
            return art.exit_code;
        }
    } catch (const hjsys::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
