// Command-line front end: assembly <simulate|optimize|compare|verify>.

#include <algorithm>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "assembly/assembly.hpp"

namespace {

constexpr const char* kVersion = "assembly 1.0.0";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal annealing schedules for Lennard-Jones particle assembly"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "Roll out one trajectory and write trajectory, summary and H(t) plot data"},
        {"optimize", "Optimize the temperature schedule and score it on held-out paths"},
        {"compare", "Score two schedules on shared held-out paths"},
        {"verify", "Check noise-free convergence: H dissipation, equilibrium, distance floor"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Configuration file (key = value lines)");
        sub->add_option("--set", overrides, "Override one key, e.g. --set system.n=10 (repeatable)");
        sub->add_option("--threads", threads, "Maximum worker threads (results do not depend on it)")
            ->check(CLI::Range(1u, 1024u));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : assembly::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    assembly::CommandContext ctx;
    ctx.threads = threads;
    ctx.out = &std::cout;
    ctx.log = &std::cerr;

    return assembly::run_guarded(
        [&] {
            ctx.config = config_path.empty() ? assembly::ExperimentConfig{} : assembly::load_config(config_path);
            for (const auto& o : overrides) assembly::apply_override(ctx.config, o);
            ctx.config.validate();
            if (command == "simulate") return assembly::cmd_simulate(ctx);
            if (command == "optimize") return assembly::cmd_optimize(ctx);
            if (command == "compare") return assembly::cmd_compare(ctx);
            return assembly::cmd_verify(ctx);
        },
        std::cerr);
}
