#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

using namespace ddspin::cli;

int main(int argc, char** argv) {
    CLI::App app{"ddspin: solvers for driven-dissipative spin-1/2 lattices"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int threads = 2;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;

    auto add_run_options = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "JSON run configuration");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker threads for sweeps");
        cmd->add_option("--seed", seed, "seed recorded in the run sidecar");
        cmd->add_option("--override", overrides,
                        "configuration override key=value (repeatable)");
    };

    auto* mf_scan = app.add_subcommand("mf-scan", "meanfield fixed points and bistability scan");
    add_run_options(mf_scan);
    auto* mfqf_run = app.add_subcommand("mfqf-run", "single MFQF trajectory to steady state");
    add_run_options(mfqf_run);
    auto* mfqf_sweep = app.add_subcommand("mfqf-sweep", "MFQF parameter sweep with warm starts");
    add_run_options(mfqf_sweep);
    auto* exact_scan = app.add_subcommand("exact-scan", "exact Lindblad scan on small lattices");
    add_run_options(exact_scan);

    auto* emit = app.add_subcommand("emit-plotdata", "column data for figure reproduction");
    std::string figure;
    std::vector<std::string> inputs;
    emit->add_option("--figure", figure, "figure id (fig1a, fig2a, fig3a, ...)")->required();
    emit->add_option("--out", out_dir, "output directory");
    emit->add_option("inputs", inputs, "records CSV files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (emit->parsed()) return cmd_emit_plotdata(figure, inputs, out_dir);

        CommandContext ctx;
        ctx.out_dir = out_dir;
        ctx.threads = threads;
        ctx.seed = seed;
        ctx.config_path = config_path;

        const RunConfig cfg = load_config(config_path, overrides);
        if (mf_scan->parsed()) {
            ctx.command = "mf-scan";
            return cmd_mf_scan(cfg, ctx);
        }
        if (mfqf_run->parsed()) {
            ctx.command = "mfqf-run";
            return cmd_mfqf_run(cfg, ctx);
        }
        if (mfqf_sweep->parsed()) {
            ctx.command = "mfqf-sweep";
            return cmd_mfqf_sweep(cfg, ctx);
        }
        if (exact_scan->parsed()) {
            ctx.command = "exact-scan";
            return cmd_exact_scan(cfg, ctx);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
