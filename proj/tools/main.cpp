#include <iostream>

#include <CLI11.hpp>

#include "morsevanish_cli/runner.hpp"

int main(int argc, char** argv)
{
    using namespace morsevanish::cli;
    CLI::App app{"Finite-action Morse homology of f + eps/tau", "morsevanish"};
    app.require_subcommand(1);
    Flags flags;
    std::string out_dir = flags.out.string();

    for (const auto& name : kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "problem config (JSON)");
        sub->add_option("--problem", flags.problem, "catalog entry instead of a config");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", flags.seed, "seed for the Morse tilt")->capture_default_str();
        sub->add_option("--eps", flags.eps, "perturbation size");
        sub->add_option("--grid", flags.grid, "eps grid, e.g. 2^-3..2^-12");
        sub->add_option("--lambda", flags.lambda, "lower level -lambda and window (-lambda, lambda)");
        sub->add_option("--Lambda", flags.Lambda, "upper oracle level");
        sub->add_option("--res", flags.res, "oracle cells per axis");
        sub->add_option("--thetas", flags.thetas, "angles for sweep-theta")->capture_default_str();
        sub->add_option("--jobs", flags.jobs, "worker threads (0: all cores)")->capture_default_str();
        if (name == "flow") {
            sub->add_option("--source", flags.source, "critical point id")->required();
            sub->add_flag("--paths", flags.paths, "dump trajectories as CSV");
        }
        if (name == "continue") {
            sub->add_option("--eps-from", flags.eps_from, "start of the eps path");
            sub->add_option("--eps-to", flags.eps_to, "end of the eps path");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    flags.out = out_dir;
    return run(app.get_subcommands().front()->get_name(), flags, std::cout, std::cerr);
}
