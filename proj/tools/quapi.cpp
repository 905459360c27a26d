// quapi: command-line front end (run, sweep, oracle, fit, report)

#include <iostream>

#include <CLI11.hpp>

#include "quapi/commands.hpp"

int main(int argc, char** argv) {
    using namespace quapi;

    CLI::App app{"Two-bath quasi-adiabatic path-integral simulator"};
    app.require_subcommand(1);

    CommandOptions opt;
    int workers = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out, "Output directory (overrides output.directory)");
    };
    auto add_engine = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_flag("--deterministic", opt.deterministic, "Single worker, fixed reduction order");
        sub->add_option("--workers", workers, "Worker threads (ignored in deterministic mode)")
            ->check(CLI::PositiveNumber);
        add_common(sub);
    };

    auto* run = app.add_subcommand("run", "Evolve one configuration, write trajectory CSV and metadata JSON");
    add_engine(run);
    auto* sweep = app.add_subcommand("sweep", "Run a (dt, memory) grid and write a convergence report");
    add_engine(sweep);
    auto* oracle = app.add_subcommand("oracle", "Compare the two-bath engine with the brute-force path sum");
    add_engine(oracle);

    auto* fit = app.add_subcommand("fit", "Fit a damped cosine to trajectory CSVs");
    fit->add_option("trajectories", opt.inputs, "Trajectory CSV files")->required();
    fit->add_option("--window", opt.window, "Fit window tmin:tmax (either side may be empty)");
    fit->add_option("--channel", opt.channel, "Observable to fit")->check(CLI::IsMember({"px", "py", "pz"}));
    add_common(fit);

    auto* report = app.add_subcommand("report", "Summarize trajectory CSVs (fits, convergence)");
    report->add_option("trajectories", opt.inputs, "Trajectory CSV files")->required();
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    if (workers > 0) opt.workers = workers;

    auto dispatch = [&]() -> int {
        if (*run) return cmd_run(opt, std::cout);
        if (*sweep) return cmd_sweep(opt, std::cout);
        if (*oracle) return cmd_oracle(opt, std::cout);
        if (*fit) return cmd_fit(opt, std::cout);
        return cmd_report(opt, std::cout);
    };
    return guarded(dispatch, std::cerr);
}
