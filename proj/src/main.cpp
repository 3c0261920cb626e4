#include "sgcat/config.hpp"
#include "sgcat/errors.hpp"
#include "sgcat/runner.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    double fixed_step = 0.0;
    int workers = 0;
    std::string format;
    std::string preset;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", flags.out_dir, "output directory (default: $SGCAT_OUT_DIR or .)");
    cmd->add_option("--fixed-step", flags.fixed_step,
                    "use the fixed-step solver with this dt in seconds (bit-stable output)");
    cmd->add_option("--workers", flags.workers, "worker threads for sweeps");
    cmd->add_option("--format", flags.format, "artifact format")
        ->check(CLI::IsMember({"csv", "svg", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis toolkit for the magnetic catapult protocol:\n"
                 "spin-dependent trap dynamics, closed-loop superposition protocols,\n"
                 "coherence budgets, wavepacket propagation and scaling fits."};
    app.require_subcommand(1);
    CommonFlags flags;

    CLI::App* simulate = app.add_subcommand("simulate", "Two-arm trap run over a fixed window");
    CLI::App* protocol =
        app.add_subcommand("protocol", "Full staged catapult protocol with closure");
    CLI::App* budget = app.add_subcommand("coherence-budget",
                                          "Field-accuracy tables for a target coherence");
    CLI::App* quantum =
        app.add_subcommand("quantum", "Split-step wavepacket evolution in the trap");
    CLI::App* scaling =
        app.add_subcommand("scaling-fit", "Stage-I velocity-difference scaling fit");
    CLI::App* sweep = app.add_subcommand("sweep", "Parameter-grid sweep with summary CSV");
    for (CLI::App* cmd : {simulate, protocol, budget, quantum, scaling, sweep})
        add_common(cmd, flags);
    protocol->add_option("--preset", flags.preset,
                         "built-in protocol preset: m17, m16 or m15");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string mode = app.get_subcommands().front()->get_name();
        sgcat::RunConfig cfg;
        if (!flags.config_path.empty() && !flags.preset.empty())
            throw sgcat::ConfigError("--config and --preset are mutually exclusive");
        if (!flags.config_path.empty()) {
            cfg = sgcat::load_config(flags.config_path, mode);
        } else if (!flags.preset.empty()) {
            cfg = sgcat::parse_config("{\"preset\":\"" + flags.preset + "\"}", mode);
        } else {
            cfg = sgcat::parse_config("{}", mode);
        }
        if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
        if (flags.fixed_step > 0.0) {
            cfg.solver.mode = sgcat::StepControl::Mode::fixed;
            cfg.solver.fixed_dt = flags.fixed_step;
        }
        if (flags.workers > 0) cfg.workers = flags.workers;
        if (flags.format == "csv") cfg.format = sgcat::OutputFormat::Csv;
        if (flags.format == "svg") cfg.format = sgcat::OutputFormat::Svg;
        if (flags.format == "both") cfg.format = sgcat::OutputFormat::Both;
        sgcat::run(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
