#include <iostream>

#include "CLI11.hpp"

#include "pathlab/experiments.hpp"
#include "pathlab/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pathlab: growth, currents and Lyapunov exponents of torus maps"};
    app.require_subcommand(1);
    std::string config, out;
    int threads = 0;
    std::uint64_t seed = 0;
    for (const char* name : {"analyze", "growth", "cycle", "exponents", "detect", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--out", out, "output directory")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads (default: PATHLAB_THREADS, then hardware)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pathlab::kExitConfig;
    }
    pathlab::RunContext ctx;
    ctx.out = out;
    ctx.threads = pathlab::resolve_threads(threads);
    for (auto* sub : app.get_subcommands()) {
        if (sub->get_option("--seed")->count() > 0) ctx.seed = seed;
        return pathlab::run_command(sub->get_name(), config, ctx, std::cerr);
    }
    return pathlab::kExitConfig;
}
