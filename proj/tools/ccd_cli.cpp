// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccd/ccd.h"

namespace {

int exit_code(ccd_status s) {
    switch (s) {
        case CCD_OK: return 0;
        case CCD_ERR_INVALID_ARGUMENT:
        case CCD_ERR_PARSE:
        case CCD_ERR_VALIDATION: return 1;
        case CCD_ERR_IO:
        case CCD_ERR_RUNTIME: break;
    }
    return 2;
}

int report(ccd_status s) {
    if (s != CCD_OK) std::cerr << "error (" << ccd_status_name(s) << "): " << ccd_last_error() << '\n';
    return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal cyber-defence experiments: simulate, optimise interventions, plot convergence"};
    app.require_subcommand(0, 1);

    bool print_schema = false;
    std::string scenario, out_dir = "out", data, methods = "BO,CBO,DCBO";
    std::string traces, oracle_csv, svg;
    std::vector<std::size_t> slices{22, 23, 24};
    ccd_experiment_options opts;
    ccd_experiment_options_init(&opts);
    std::uint64_t seed = opts.seed;
    bool dump = false;

    app.add_flag("--print-schema", print_schema, "Print the scenario file schema and exit");

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario, "Scenario file (key = value)")->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
        cmd->add_flag("--print-schema", print_schema, "Print the scenario file schema and exit");
    };
    auto slice_opts = [&](CLI::App* cmd) {
        cmd->add_option("--slices", slices, "Time slices to optimise")->delimiter(',')->capture_default_str();
        cmd->add_option("--rollouts", opts.n_rollouts, "Simulator rollouts per objective evaluation")
            ->capture_default_str();
    };

    auto* gen = app.add_subcommand("generate", "Write observational data and the causal diagram edge list");
    common(gen);
    gen->add_flag("--dump-trajectories", dump, "Also write per-environment trajectory CSVs");

    auto* opt = app.add_subcommand("optimize", "Run BO/CBO/DCBO replicates and write convergence traces");
    common(opt);
    slice_opts(opt);
    opt->add_option("--methods", methods, "Comma-separated subset of BO,CBO,DCBO")->capture_default_str();
    opt->add_option("--budget", opts.budget, "Trials per slice")->capture_default_str();
    opt->add_option("--replicates", opts.replicates, "Seeded replicates per method")->capture_default_str();
    opt->add_option("--data", data, "Observational CSV (default: generate in-run)");
    opt->add_option("--candidates", opts.candidates_per_set, "Acquisition candidates per set")->capture_default_str();
    opt->add_option("--mc", opts.n_mc, "Monte-Carlo samples per causal prior value")->capture_default_str();
    opt->add_option("--threads", opts.threads, "Worker threads (0 = all cores)")->capture_default_str();

    auto* orc = app.add_subcommand("oracle", "Grid-search the true optimal intervention per slice");
    common(orc);
    slice_opts(orc);
    orc->add_option("--resolution", opts.oracle_resolution, "Grid points per dimension")->capture_default_str();

    auto* plt = app.add_subcommand("plot", "Render convergence plots (SVG) from trace and oracle CSVs");
    plt->add_option("--out", out_dir, "Directory holding traces.csv / oracle.csv")->capture_default_str();
    plt->add_option("--traces", traces, "Trace CSV (default: <out>/traces.csv)");
    plt->add_option("--oracle", oracle_csv, "Oracle CSV (default: <out>/oracle.csv)");
    plt->add_option("--svg", svg, "Output SVG (default: <out>/convergence.svg)");
    plt->add_flag("--print-schema", print_schema, "Print the scenario file schema and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (print_schema) {
        std::cout << ccd_scenario_schema();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 1;
    }

    opts.scenario_path = scenario.empty() ? nullptr : scenario.c_str();
    opts.out_dir = out_dir.c_str();
    opts.dataset_path = data.empty() ? nullptr : data.c_str();
    opts.seed = seed;
    opts.methods = methods.c_str();
    opts.slices = slices.data();
    opts.n_slices = slices.size();
    opts.dump_trajectories = dump ? 1 : 0;

    if (*gen) return report(ccd_cmd_generate(&opts));
    if (*opt) return report(ccd_cmd_optimize(&opts));
    if (*orc) return report(ccd_cmd_oracle(&opts));

    const auto dir = std::filesystem::path(out_dir);
    if (traces.empty()) traces = (dir / "traces.csv").string();
    if (oracle_csv.empty()) oracle_csv = (dir / "oracle.csv").string();
    if (svg.empty()) svg = (dir / "convergence.svg").string();
    return report(ccd_cmd_plot(traces.c_str(), oracle_csv.c_str(), svg.c_str()));
}
