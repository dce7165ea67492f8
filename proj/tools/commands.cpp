#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "ddspin/csv.hpp"
#include "ddspin/meanfield.hpp"
#include "ddspin/mfqf.hpp"

namespace ddspin::cli {

namespace fs = std::filesystem;

namespace {

void write_invocation(const RunConfig& cfg, const CommandContext& ctx,
                      const std::string& prefix) {
    json j;
    j["version"] = kVersion;
    j["command"] = ctx.command;
    j["threads"] = ctx.threads;
    j["seed"] = ctx.seed;
    j["config"] = config_to_json(cfg);
    std::ofstream os(fs::path(ctx.out_dir) / (prefix + "_config.json"));
    os << j.dump(2) << '\n';
}

std::string prefix_or(const RunConfig& cfg, const char* fallback) {
    return cfg.prefix.empty() ? fallback : cfg.prefix;
}

} // namespace

int cmd_mf_scan(const RunConfig& cfg, const CommandContext& ctx) {
    if (!cfg.has_sweep) {
        std::cerr << "mf-scan: config needs a sweep section\n";
        return 1;
    }
    if (cfg.tier != SolverTier::MF) {
        std::cerr << "mf-scan: config tier must be \"mf\"\n";
        return 1;
    }
    const std::string prefix = prefix_or(cfg, "mf");
    fs::create_directories(ctx.out_dir);

    const auto grid = make_grid(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points);
    const int z = cfg.lattice.connectivity();
    bool ok = true;

    // per-point fixed-point table
    {
        std::ofstream os(fs::path(ctx.out_dir) / (prefix + "_fixed_points.csv"));
        os << "parameter,index,mu_x,mu_y,mu_z,stability,eig1_re,eig1_im,eig2_re,eig2_im,"
              "eig3_re,eig3_im\n";
        for (double v : grid) {
            try {
                const auto set =
                    mf_fixed_points(with_parameter(cfg.params, cfg.parameter, v), z);
                int idx = 0;
                for (const auto& fp : set.points) {
                    os << fmt_double(v) << ',' << idx++ << ',' << fmt_double(fp.mu[0]) << ','
                       << fmt_double(fp.mu[1]) << ',' << fmt_double(fp.mu[2]) << ','
                       << (fp.stability == Stability::Stable     ? "stable"
                           : fp.stability == Stability::Unstable ? "unstable"
                                                                 : "marginal");
                    for (const auto& ev : fp.jacobian_eigenvalues)
                        os << ',' << fmt_double(ev.real()) << ',' << fmt_double(ev.imag());
                    os << '\n';
                }
            } catch (const std::exception& e) {
                std::cerr << "mf-scan: fixed-point enumeration failed at " << v << ": "
                          << e.what() << '\n';
                ok = false;
            }
        }
    }

    // bistable intervals with bisection-refined edges
    try {
        BistabilityScanOptions opt;
        opt.n_threads = ctx.threads;
        const auto region = mf_bistability_scan(cfg.params, z, cfg.parameter, grid, opt);
        std::ofstream os(fs::path(ctx.out_dir) / (prefix + "_bistable_intervals.csv"));
        os << "low,high\n";
        for (const auto& [lo, hi] : region.intervals)
            os << fmt_double(lo) << ',' << fmt_double(hi) << '\n';
        std::ofstream cs(fs::path(ctx.out_dir) / (prefix + "_stable_counts.csv"));
        cs << "parameter,stable_count\n";
        for (size_t i = 0; i < grid.size(); ++i)
            cs << fmt_double(grid[i]) << ',' << region.stable_counts[i] << '\n';
        if (!region.failures.empty()) ok = false;
    } catch (const std::exception& e) {
        std::cerr << "mf-scan: " << e.what() << '\n';
        ok = false;
    }

    // hysteresis records via warm-started integration
    auto plan = cfg.to_plan(ctx.threads);
    const auto sweep = run_sweep(plan);
    persist_results(sweep, ctx.out_dir, prefix);
    if (plan.protocol == SweepProtocol::BothDirections)
        persist_diagram(detect_branches(sweep), ctx.out_dir, prefix);
    write_invocation(cfg, ctx, prefix);
    return (ok && sweep.all_converged) ? 0 : 1;
}

int cmd_mfqf_run(const RunConfig& cfg, const CommandContext& ctx) {
    if (cfg.tier != SolverTier::MFQF) {
        std::cerr << "mfqf-run: config tier must be \"mfqf\"\n";
        return 1;
    }
    const std::string prefix = prefix_or(cfg, "mfqf_run");
    fs::create_directories(ctx.out_dir);

    MfqfOptions opt;
    opt.ode.rtol = cfg.solver.rtol;
    opt.ode.atol = cfg.solver.atol;
    opt.ode.steady_tol = cfg.solver.steady_tol;
    const auto s0 = mfqf_cold_start(cfg.lattice);
    const auto run = mfqf_integrate(s0, cfg.params, cfg.run_t_final, opt, cfg.record_times);

    write_trajectory_csv((fs::path(ctx.out_dir) / (prefix + "_trajectory.csv")).string(), run);
    write_correlator_csv((fs::path(ctx.out_dir) / (prefix + "_correlators.csv")).string(),
                         run.final_state.eta);

    // single steady-state record with the derived observables
    SweepResult sw;
    sw.plan = cfg.to_plan(ctx.threads);
    sw.plan.grid = {cfg.params.delta};
    sw.plan.protocol = SweepProtocol::ColdStart;
    SteadyStateRecord rec;
    rec.params = cfg.params;
    rec.parameter = cfg.params.delta;
    rec.direction = SweepDirection::Cold;
    rec.mu_s = run.final_state.mu;
    rec.converged = run.steady;
    rec.t_reached = run.final_state.time;
    const auto obs = correlation_observables(run.final_state.eta, run.series_t, run.series_dmu2,
                                             cfg.solver.corr_fit, cfg.solver.relax_fit);
    for (int c = 0; c < kNumPairs; ++c) {
        rec.lambda[c] = obs.lambda[c].ok ? obs.lambda[c].value : std::nan("");
        rec.sigma[c] = obs.sigma[c];
    }
    rec.kappa = obs.kappa.ok ? obs.kappa.value : std::nan("");
    sw.records.push_back(rec);
    sw.all_converged = run.ok();
    persist_results(sw, ctx.out_dir, prefix);
    write_invocation(cfg, ctx, prefix);

    if (!run.ok()) {
        std::cerr << "mfqf-run: integration failed: " << run.message << '\n';
        return 1;
    }
    return 0;
}

int cmd_mfqf_sweep(const RunConfig& cfg, const CommandContext& ctx) {
    if (!cfg.has_sweep) {
        std::cerr << "mfqf-sweep: config needs a sweep section\n";
        return 1;
    }
    if (cfg.tier != SolverTier::MFQF) {
        std::cerr << "mfqf-sweep: config tier must be \"mfqf\"\n";
        return 1;
    }
    const std::string prefix = prefix_or(cfg, "mfqf");
    fs::create_directories(ctx.out_dir);
    auto plan = cfg.to_plan(ctx.threads);
    const auto sweep = run_sweep(plan);
    persist_results(sweep, ctx.out_dir, prefix);
    if (plan.protocol == SweepProtocol::BothDirections)
        persist_diagram(detect_branches(sweep), ctx.out_dir, prefix);
    write_invocation(cfg, ctx, prefix);
    if (!sweep.all_converged)
        std::cerr << "mfqf-sweep: some points did not reach the steady tolerance\n";
    return sweep.all_converged ? 0 : 1;
}

int cmd_exact_scan(const RunConfig& cfg, const CommandContext& ctx) {
    if (!cfg.has_sweep) {
        std::cerr << "exact-scan: config needs a sweep section\n";
        return 1;
    }
    if (cfg.tier != SolverTier::Exact) {
        std::cerr << "exact-scan: config tier must be \"exact\"\n";
        return 1;
    }
    const bool reduced = cfg.lattice.geometry() == Geometry::FullyConnected &&
                         cfg.solver.use_fc_reduced;
    if (!reduced && cfg.lattice.num_sites() > cfg.solver.max_sites_exact) {
        // refuse before any state is allocated
        std::cerr << "exact-scan: " << cfg.lattice.num_sites()
                  << " sites exceed solver.max_sites_exact = " << cfg.solver.max_sites_exact
                  << '\n';
        return 2;
    }
    const std::string prefix = prefix_or(cfg, "exact");
    fs::create_directories(ctx.out_dir);
    auto plan = cfg.to_plan(ctx.threads);
    const auto sweep = run_sweep(plan);
    persist_results(sweep, ctx.out_dir, prefix);
    write_invocation(cfg, ctx, prefix);
    if (!sweep.all_converged)
        std::cerr << "exact-scan: some points did not converge\n";
    return sweep.all_converged ? 0 : 1;
}

int cmd_emit_plotdata(const std::string& figure, const std::vector<std::string>& inputs,
                      const std::string& out_dir) {
    static const std::map<std::string, std::pair<std::string, int>> columns = {
        {"fig1a", {"mu_x", -1}},      {"fig1b", {"lambda_xx", PXX}},
        {"fig1c", {"sigma_xx", PXX}}, {"fig2a", {"b_x", -2}},
        {"fig3a", {"mu_x", -1}},      {"fig3b", {"sigma_xx", PXX}},
        {"fig3c", {"kappa", -3}},     {"ising2a", {"mu_x", -1}},
        {"ising2b", {"mu_z", -4}},    {"ising3d", {"sigma_zz", PZZ}},
    };
    const auto it = columns.find(figure);
    if (it == columns.end()) {
        std::cerr << "emit-plotdata: unknown figure id '" << figure << "'; known:";
        for (const auto& [k, v] : columns) std::cerr << ' ' << k;
        std::cerr << '\n';
        return 1;
    }
    if (inputs.empty()) {
        std::cerr << "emit-plotdata: no input record files given\n";
        return 1;
    }
    fs::create_directories(out_dir);

    json manifest;
    manifest["figure"] = figure;
    manifest["curves"] = json::array();

    for (const auto& input : inputs) {
        LoadedRecords loaded;
        try {
            loaded = load_records_csv(input);
        } catch (const std::exception& e) {
            std::cerr << "emit-plotdata: " << e.what() << '\n';
            return 1;
        }
        const std::string stem = fs::path(input).stem().string();
        for (const auto dir :
             {SweepDirection::Cold, SweepDirection::Forward, SweepDirection::Backward}) {
            std::vector<std::pair<double, double>> rows;
            for (const auto& r : loaded.records) {
                if (r.direction != dir || !r.converged) continue;
                double y;
                switch (it->second.second) {
                    case -1: y = r.mu_s[0]; break;
                    case -2: y = r.b_x; break;
                    case -3: y = r.kappa; break;
                    case -4: y = r.mu_s[2]; break;
                    default:
                        y = (it->second.first.rfind("lambda", 0) == 0)
                                ? r.lambda[it->second.second]
                                : r.sigma[it->second.second];
                }
                if (std::isnan(y)) continue;
                rows.emplace_back(r.parameter, y);
            }
            if (rows.empty()) continue;
            const std::string fname =
                figure + "_" + stem + "_" + to_string(dir) + ".dat";
            std::ofstream os(fs::path(out_dir) / fname);
            os << "# parameter " << it->second.first << '\n';
            for (const auto& [x, y] : rows) os << fmt_double(x) << ' ' << fmt_double(y) << '\n';
            manifest["curves"].push_back({{"file", fname},
                                          {"source", input},
                                          {"direction", to_string(dir)},
                                          {"tier", loaded.tier},
                                          {"column", it->second.first}});
        }
    }
    if (manifest["curves"].empty()) {
        std::cerr << "emit-plotdata: inputs contained no usable rows for " << figure << '\n';
        return 1;
    }
    std::ofstream os(fs::path(out_dir) / (figure + "_manifest.json"));
    os << manifest.dump(2) << '\n';
    return 0;
}

} // namespace ddspin::cli
