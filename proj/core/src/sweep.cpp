#include "ddspin/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ddspin/csv.hpp"
#include "ddspin/fc_reduced.hpp"
#include "ddspin/parallel.hpp"

namespace ddspin {

using ordered_json = nlohmann::ordered_json;

std::string to_string(SolverTier t) {
    switch (t) {
        case SolverTier::MF: return "mf";
        case SolverTier::MFQF: return "mfqf";
        case SolverTier::Exact: return "exact";
    }
    return "?";
}

std::string to_string(SweepProtocol p) {
    switch (p) {
        case SweepProtocol::ColdStart: return "cold";
        case SweepProtocol::WarmForward: return "forward";
        case SweepProtocol::WarmBackward: return "backward";
        case SweepProtocol::BothDirections: return "both";
    }
    return "?";
}

std::string to_string(SweepDirection d) {
    switch (d) {
        case SweepDirection::Cold: return "cold";
        case SweepDirection::Forward: return "forward";
        case SweepDirection::Backward: return "backward";
    }
    return "?";
}

void SweepPlan::validate() const {
    params.validate();
    if (grid.size() < 1) throw std::invalid_argument("SweepPlan: empty grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("SweepPlan: grid must be strictly increasing");
    if (solver.t_final <= 0 || solver.t_max < solver.t_final)
        throw std::invalid_argument("SweepPlan: need 0 < t_final <= t_max");
}

std::vector<SweepDirection> SweepPlan::directions() const {
    switch (protocol) {
        case SweepProtocol::ColdStart: return {SweepDirection::Cold};
        case SweepProtocol::WarmForward: return {SweepDirection::Forward};
        case SweepProtocol::WarmBackward: return {SweepDirection::Backward};
        case SweepProtocol::BothDirections:
            return {SweepDirection::Forward, SweepDirection::Backward};
    }
    return {};
}

std::vector<double> make_grid(double start, double stop, int points) {
    if (points < 1) throw std::invalid_argument("make_grid: need at least one point");
    if (points == 1) return {start};
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = start + (stop - start) * double(i) / (points - 1);
    return g;
}

namespace {

// ---- MF tier ---------------------------------------------------------------

SteadyStateRecord solve_point_mf(const SweepPlan& plan, double value, SweepDirection dir,
                                 const Bloch& start) {
    const ModelParams p = with_parameter(plan.params, plan.parameter, value);
    const SolverSettings& s = plan.solver;
    SteadyStateRecord rec;
    rec.params = p;
    rec.parameter = value;
    rec.direction = dir;

    OdeOptions ode{.rtol = s.rtol, .atol = s.atol, .steady_tol = s.steady_tol};
    Bloch mu = start;
    double t_total = 0.0;
    double horizon = s.t_final;
    std::vector<double> ts, a;
    bool steady = false;
    while (true) {
        auto traj = mf_integrate(mu, p, plan.lattice.connectivity(), horizon, ode,
                                 std::clamp(horizon / 512.0, 0.05, 2.0));
        for (size_t i = 0; i < traj.times.size(); ++i) {
            const Bloch dmu = mf_rhs(traj.mu[i], p, plan.lattice.connectivity());
            ts.push_back(t_total + traj.times[i]);
            a.push_back(2.0 * traj.mu[i].dot(dmu));
        }
        mu = traj.final_mu();
        t_total += traj.times.back();
        steady = traj.status == OdeStatus::SteadyState;
        if (steady || t_total >= s.t_max || !traj.ok()) {
            if (!traj.ok()) rec.note = traj.message;
            break;
        }
        horizon = std::min(2.0 * horizon, s.t_max - t_total);
    }
    rec.mu_s = mu;
    rec.converged = steady;
    rec.t_reached = t_total;
    rec.residual = mf_rhs(mu, p, plan.lattice.connectivity()).lpNorm<Eigen::Infinity>();
    const FitResult kap = fit_relaxation_rate(ts, a, plan.solver.relax_fit);
    rec.kappa = kap.ok ? kap.value : std::nan("");
    return rec;
}

// ---- MFQF tier --------------------------------------------------------------

SteadyStateRecord solve_point_mfqf(const SweepPlan& plan, double value, SweepDirection dir,
                                   MfqfState& state) {
    const ModelParams p = with_parameter(plan.params, plan.parameter, value);
    const SolverSettings& s = plan.solver;
    SteadyStateRecord rec;
    rec.params = p;
    rec.parameter = value;
    rec.direction = dir;

    MfqfOptions opt;
    opt.ode.rtol = s.rtol;
    opt.ode.atol = s.atol;
    opt.ode.steady_tol = s.steady_tol;

    state.time = 0.0;
    double horizon = s.t_final;
    std::vector<double> ts, a;
    std::vector<Bloch> mus;
    bool steady = false;
    long steps = 0;
    std::string note;
    while (true) {
        // dense enough that fast warm-started convergences still leave a
        // usable relaxation record after the noise tail is clipped
        opt.series_dt = std::clamp(horizon / 512.0, 0.25, 4.0);
        auto run = mfqf_integrate(state, p, horizon, opt);
        ts.insert(ts.end(), run.series_t.begin(), run.series_t.end());
        a.insert(a.end(), run.series_dmu2.begin(), run.series_dmu2.end());
        steps += run.n_steps;
        state = run.final_state;
        steady = run.steady;
        if (!run.ok()) {
            note = run.message;
            break;
        }
        if (steady || state.time >= s.t_max) break;
        horizon = std::min(2.0 * horizon, s.t_max - state.time);
    }
    rec.mu_s = state.mu;
    rec.converged = steady;
    rec.t_reached = state.time;
    rec.steps = steps;
    rec.note = note;

    const CorrelationObservables obs =
        correlation_observables(state.eta, ts, a, s.corr_fit, s.relax_fit);
    for (int c = 0; c < kNumPairs; ++c) {
        rec.lambda[c] = obs.lambda[c].ok ? obs.lambda[c].value : std::nan("");
        rec.sigma[c] = obs.sigma[c];
    }
    rec.kappa = obs.kappa.ok ? obs.kappa.value : std::nan("");
    return rec;
}

// ---- exact tier --------------------------------------------------------------

SteadyStateRecord solve_point_exact(const SweepPlan& plan, double value, SweepDirection dir,
                                    VectorXcd* warm) {
    const ModelParams p = with_parameter(plan.params, plan.parameter, value);
    const SolverSettings& s = plan.solver;
    SteadyStateRecord rec;
    rec.params = p;
    rec.parameter = value;
    rec.direction = dir;

    const bool fc = plan.lattice.geometry() == Geometry::FullyConnected;
    if (fc && s.use_fc_reduced) {
        FcReducedSolver solver(plan.lattice.num_sites(), p);
        auto ss = solver.steady_state(s.exact_tol);
        rec.mu_s = solver.bloch_vector(ss.coeffs);
        rec.converged = ss.converged && !ss.degenerate;
        rec.residual = ss.residual;
        if (ss.degenerate) rec.note = "degenerate steady state detected";
        auto dist = solver.distribution(ss.coeffs, 'x');
        rec.b_x = bimodality_index(dist);
        rec.distribution = std::move(dist);
        if (s.with_spectrum) rec.spectrum = solver.spectrum_edge(s.spectrum_count);
        return rec;
    }

    Liouvillian liouv = build_liouvillian(plan.lattice, p, {.max_sites = s.max_sites_exact});
    SteadyStateOptions opt;
    opt.tol = s.exact_tol;
    // cold protocol: all spins down, matching the other tiers' initial state
    const VectorXcd down =
        vec(product_density_matrix(std::vector<Bloch>(liouv.n_sites, Bloch(0, 0, -1))));
    opt.warm_start = &down;
    if (warm && warm->size() == liouv.dim()) opt.warm_start = warm;
    auto ss = steady_state(liouv, opt);
    rec.converged = ss.converged && ss.null_space_dim == 1;
    rec.residual = ss.residual;
    rec.note = ss.message;
    if (warm) *warm = ss.vec_rho;
    // uniform magnetization: average the per-site Bloch vectors
    Bloch mu = Bloch::Zero();
    for (int site = 0; site < liouv.n_sites; ++site)
        mu += site_bloch_vector(ss.rho, liouv.n_sites, site);
    rec.mu_s = mu / liouv.n_sites;
    auto dist = magnetization_distribution(ss.rho, liouv.n_sites, 'x');
    rec.b_x = bimodality_index(dist);
    rec.distribution = std::move(dist);
    if (s.with_spectrum) {
        auto spec = liouvillian_spectrum_edge(liouv, s.spectrum_count);
        rec.spectrum = spec.eigenvalues;
    }
    return rec;
}

std::vector<SteadyStateRecord> run_direction(const SweepPlan& plan, SweepDirection dir) {
    const size_t n = plan.grid.size();
    std::vector<SteadyStateRecord> recs(n);

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i)
        order[i] = (dir == SweepDirection::Backward) ? n - 1 - i : i;

    if (plan.tier == SolverTier::MF) {
        Bloch warm(0, 0, -1); // all spins down
        for (size_t k = 0; k < n; ++k) {
            const size_t i = order[k];
            const Bloch start = (dir == SweepDirection::Cold) ? Bloch(0, 0, -1) : warm;
            recs[i] = solve_point_mf(plan, plan.grid[i], dir, start);
            warm = recs[i].mu_s;
        }
    } else if (plan.tier == SolverTier::MFQF) {
        MfqfState state = mfqf_cold_start(plan.lattice);
        for (size_t k = 0; k < n; ++k) {
            const size_t i = order[k];
            if (dir == SweepDirection::Cold) state = mfqf_cold_start(plan.lattice);
            recs[i] = solve_point_mfqf(plan, plan.grid[i], dir, state);
        }
    } else {
        VectorXcd warm;
        for (size_t k = 0; k < n; ++k) {
            const size_t i = order[k];
            recs[i] = solve_point_exact(plan, plan.grid[i], dir,
                                        dir == SweepDirection::Cold ? nullptr : &warm);
        }
    }
    return recs;
}

} // namespace

SweepResult run_sweep(const SweepPlan& plan) {
    plan.validate();
    SweepResult out;
    out.plan = plan;

    const auto dirs = plan.directions();
    std::vector<std::vector<SteadyStateRecord>> per_dir(dirs.size());

    if (dirs.size() == 2 && plan.threads > 1) {
        // the two warm-start chains are independent of each other
        auto fwd = std::async(std::launch::async, [&] { return run_direction(plan, dirs[0]); });
        per_dir[1] = run_direction(plan, dirs[1]);
        per_dir[0] = fwd.get();
    } else if (dirs.size() == 1 && dirs[0] == SweepDirection::Cold && plan.threads > 1) {
        // cold points are mutually independent
        per_dir[0].resize(plan.grid.size());
        parallel_for(int(plan.grid.size()), plan.threads, [&](int i) {
            if (plan.tier == SolverTier::MF) {
                per_dir[0][i] = solve_point_mf(plan, plan.grid[i], SweepDirection::Cold,
                                               Bloch(0, 0, -1));
            } else if (plan.tier == SolverTier::MFQF) {
                MfqfState state = mfqf_cold_start(plan.lattice);
                per_dir[0][i] = solve_point_mfqf(plan, plan.grid[i], SweepDirection::Cold, state);
            } else {
                per_dir[0][i] = solve_point_exact(plan, plan.grid[i], SweepDirection::Cold,
                                                  nullptr);
            }
        });
    } else {
        for (size_t d = 0; d < dirs.size(); ++d) per_dir[d] = run_direction(plan, dirs[d]);
    }

    for (auto& recs : per_dir) {
        for (auto& r : recs) {
            out.all_converged = out.all_converged && r.converged;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

BranchDiagram detect_branches(const SweepResult& sweep, double merge_tol) {
    const auto& plan = sweep.plan;
    if (plan.protocol != SweepProtocol::BothDirections)
        throw std::invalid_argument("detect_branches: needs a both-directions sweep");

    BranchDiagram diag;
    diag.parameter = plan.parameter;
    diag.grid = plan.grid;
    diag.merge_tol = merge_tol;
    const size_t n = plan.grid.size();
    diag.cluster_counts.assign(n, 0);

    std::vector<std::vector<const SteadyStateRecord*>> by_point(n);
    for (const auto& r : sweep.records) {
        for (size_t i = 0; i < n; ++i) {
            if (std::abs(r.parameter - plan.grid[i]) <= 1e-12) {
                if (r.converged)
                    by_point[i].push_back(&r);
                else
                    diag.excluded.emplace_back(r.parameter, r.direction);
                break;
            }
        }
    }
    for (size_t i = 0; i < n; ++i) {
        std::vector<Bloch> clusters;
        for (const auto* r : by_point[i]) {
            bool merged = false;
            for (const auto& c : clusters) {
                if ((c - r->mu_s).lpNorm<Eigen::Infinity>() <= merge_tol) {
                    merged = true;
                    break;
                }
            }
            if (!merged) clusters.push_back(r->mu_s);
        }
        diag.cluster_counts[i] = static_cast<int>(clusters.size());
    }

    size_t i = 0;
    while (i < n) {
        if (diag.cluster_counts[i] < 2) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && diag.cluster_counts[j + 1] >= 2) ++j;
        diag.bistable_intervals.emplace_back(diag.grid[i], diag.grid[j]);
        i = j + 1;
    }
    return diag;
}

namespace {

constexpr const char* kRecordsHeader =
    "tier,kind,D,Z,delta,omega,coupling,direction,mu_x,mu_y,mu_z,kappa,"
    "lambda_xx,lambda_yy,lambda_zz,lambda_xy,lambda_xz,lambda_yz,"
    "sigma_xx,sigma_yy,sigma_zz,sigma_xy,sigma_xz,sigma_yz,b_x,converged";

int lattice_dim(const LatticeSpec& lat) {
    switch (lat.geometry()) {
        case Geometry::FullyConnected: return 0;
        case Geometry::Chain: return 1;
        case Geometry::HypercubicPeriodic: return lat.dim();
        case Geometry::Parallelogram2D: return 2;
    }
    return 0;
}

ordered_json lattice_to_json(const LatticeSpec& lat) {
    ordered_json j;
    switch (lat.geometry()) {
        case Geometry::FullyConnected:
            j["geometry"] = "fully_connected";
            j["n"] = lat.num_sites();
            break;
        case Geometry::Chain:
            j["geometry"] = "chain";
            j["n"] = lat.num_sites();
            j["boundary"] = lat.boundary() == Boundary::Periodic ? "periodic" : "open";
            break;
        case Geometry::HypercubicPeriodic:
            j["geometry"] = "hypercubic";
            j["dims"] = lat.sizes();
            break;
        case Geometry::Parallelogram2D:
            j["geometry"] = "parallelogram";
            j["dims"] = lat.sizes();
            j["shear"] = lat.shear();
            break;
    }
    return j;
}

} // namespace

std::vector<std::string> persist_results(const SweepResult& sweep, const std::string& out_dir,
                                         const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    const std::string csv_path = (fs::path(out_dir) / (prefix + "_records.csv")).string();
    {
        std::ofstream os(csv_path);
        if (!os) throw std::runtime_error("persist_results: cannot open " + csv_path);
        os << kRecordsHeader << '\n';
        for (const auto& r : sweep.records) {
            os << to_string(sweep.plan.tier) << ',' << to_string(r.params.kind) << ','
               << lattice_dim(sweep.plan.lattice) << ',' << sweep.plan.lattice.connectivity()
               << ',' << fmt_double(r.params.delta) << ',' << fmt_double(r.params.omega) << ','
               << fmt_double(r.params.coupling) << ',' << to_string(r.direction) << ','
               << fmt_double(r.mu_s[0]) << ',' << fmt_double(r.mu_s[1]) << ','
               << fmt_double(r.mu_s[2]) << ',' << fmt_double(r.kappa);
            for (int c = 0; c < kNumPairs; ++c) os << ',' << fmt_double(r.lambda[c]);
            for (int c = 0; c < kNumPairs; ++c) os << ',' << fmt_double(r.sigma[c]);
            os << ',' << fmt_double(r.b_x) << ',' << (r.converged ? 1 : 0) << '\n';
        }
    }
    files.push_back(csv_path);

    // distributions, when the tier produced them
    bool have_dist = false;
    for (const auto& r : sweep.records) have_dist = have_dist || r.distribution.has_value();
    if (have_dist) {
        const std::string dist_path =
            (fs::path(out_dir) / (prefix + "_distributions.csv")).string();
        std::ofstream os(dist_path);
        os << "parameter,direction,m,p\n";
        for (const auto& r : sweep.records) {
            if (!r.distribution) continue;
            for (size_t k = 0; k < r.distribution->values.size(); ++k) {
                os << fmt_double(r.parameter) << ',' << to_string(r.direction) << ','
                   << fmt_double(r.distribution->values[k]) << ','
                   << fmt_double(r.distribution->probabilities[k]) << '\n';
            }
        }
        files.push_back(dist_path);
    }

    bool have_spec = false;
    for (const auto& r : sweep.records) have_spec = have_spec || !r.spectrum.empty();
    if (have_spec) {
        const std::string spec_path = (fs::path(out_dir) / (prefix + "_spectrum.csv")).string();
        std::ofstream os(spec_path);
        os << "parameter,direction,re_lambda,im_lambda\n";
        for (const auto& r : sweep.records) {
            for (const auto& ev : r.spectrum) {
                os << fmt_double(r.parameter) << ',' << to_string(r.direction) << ','
                   << fmt_double(ev.real()) << ',' << fmt_double(ev.imag()) << '\n';
            }
        }
        files.push_back(spec_path);
    }

    const std::string json_path = (fs::path(out_dir) / (prefix + "_meta.json")).string();
    {
        const auto& plan = sweep.plan;
        ordered_json j;
        j["version"] = kVersion;
        j["tier"] = to_string(plan.tier);
        j["model"] = {{"kind", to_string(plan.params.kind)},
                      {"delta", plan.params.delta},
                      {"omega", plan.params.omega},
                      {"coupling", plan.params.coupling},
                      {"gamma", plan.params.gamma}};
        j["lattice"] = lattice_to_json(plan.lattice);
        j["sweep"] = {{"parameter", to_string(plan.parameter)},
                      {"grid_start", plan.grid.front()},
                      {"grid_stop", plan.grid.back()},
                      {"grid_points", plan.grid.size()},
                      {"protocol", to_string(plan.protocol)}};
        j["solver"] = {{"t_final", plan.solver.t_final},
                       {"t_max", plan.solver.t_max},
                       {"rtol", plan.solver.rtol},
                       {"atol", plan.solver.atol},
                       {"steady_tol", plan.solver.steady_tol},
                       {"exact_tol", plan.solver.exact_tol}};
        j["all_converged"] = sweep.all_converged;
        std::ofstream os(json_path);
        os << j.dump(2) << '\n';
    }
    files.push_back(json_path);
    return files;
}

std::vector<std::string> persist_diagram(const BranchDiagram& diagram, const std::string& out_dir,
                                         const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / (prefix + "_branches.csv")).string();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("persist_diagram: cannot open " + path);
    os << "parameter,cluster_count\n";
    for (size_t i = 0; i < diagram.grid.size(); ++i)
        os << fmt_double(diagram.grid[i]) << ',' << diagram.cluster_counts[i] << '\n';

    const std::string ipath = (fs::path(out_dir) / (prefix + "_branch_intervals.csv")).string();
    std::ofstream is(ipath);
    is << "low,high\n";
    for (const auto& [lo, hi] : diagram.bistable_intervals)
        is << fmt_double(lo) << ',' << fmt_double(hi) << '\n';
    return {path, ipath};
}

LoadedRecords load_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_records_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_records_csv: empty file " + path);
    if (line != kRecordsHeader)
        throw std::runtime_error("load_records_csv: schema mismatch in " + path);

    LoadedRecords out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 26)
            throw std::runtime_error("load_records_csv: malformed row in " + path);
        out.tier = f[0];
        SteadyStateRecord r;
        r.params.kind = (f[1] == "ising") ? InteractionKind::Ising : InteractionKind::XY;
        out.kind = f[1];
        out.dim = std::stoi(f[2]);
        out.connectivity = std::stoi(f[3]);
        r.params.delta = parse_double(f[4]);
        r.params.omega = parse_double(f[5]);
        r.params.coupling = parse_double(f[6]);
        r.direction = f[7] == "forward"    ? SweepDirection::Forward
                      : f[7] == "backward" ? SweepDirection::Backward
                                           : SweepDirection::Cold;
        r.mu_s = Bloch(parse_double(f[8]), parse_double(f[9]), parse_double(f[10]));
        r.kappa = parse_double(f[11]);
        for (int c = 0; c < kNumPairs; ++c) r.lambda[c] = parse_double(f[12 + c]);
        for (int c = 0; c < kNumPairs; ++c) r.sigma[c] = parse_double(f[18 + c]);
        r.b_x = parse_double(f[24]);
        r.converged = f[25] == "1";
        out.records.push_back(std::move(r));
    }

    // infer the swept axis: the couplings column with the most distinct values
    auto distinct = [&](auto get) {
        std::vector<double> v;
        for (const auto& r : out.records) v.push_back(get(r));
        std::sort(v.begin(), v.end());
        return std::unique(v.begin(), v.end()) - v.begin();
    };
    const auto nd = distinct([](const SteadyStateRecord& r) { return r.params.delta; });
    const auto no = distinct([](const SteadyStateRecord& r) { return r.params.omega; });
    const auto nc = distinct([](const SteadyStateRecord& r) { return r.params.coupling; });
    for (auto& r : out.records) {
        if (nd >= no && nd >= nc)
            r.parameter = r.params.delta;
        else if (no >= nc)
            r.parameter = r.params.omega;
        else
            r.parameter = r.params.coupling;
    }
    return out;
}

} // namespace ddspin
