// protoclone: command-line driver. Exit codes: 0 ok, 1 computation failure,
// 2 bad arguments or configuration.

#include <iostream>

#include <CLI11.hpp>

#include "protoclone/commands.hpp"

int main(int argc, char** argv) {
    using namespace protoclone;

    CLI::App app{"Protective-measurement cloning of a trapped electron spin"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::string out_dir;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (PROTOCLONE_OUT overrides)");
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--jobs", opts.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", opts.quiet, "suppress the summary on stdout");
    };

    const std::pair<const char*, const char*> commands[] = {
        {"spectrum", "bound levels, tunneling gaps and normalizations"},
        {"kick-curve", "probe momentum against the spin polar angle"},
        {"clone", "reconstruct a hidden spin state from three protective readouts"},
        {"discriminate", "tell |0> from |+> with a protective readout"},
        {"oracle", "time-dependent Schroedinger cross-checks"},
        {"sweep", "grid over config parameters, run in parallel"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out") > 0) opts.out_dir = out_dir;
    if (sub->count("--seed") > 0) opts.seed = seed;
    return run_command(sub->get_name(), opts, std::cout, std::cerr);
}
