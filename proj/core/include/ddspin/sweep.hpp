#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ddspin/fits.hpp"
#include "ddspin/lindblad.hpp"
#include "ddspin/meanfield.hpp"
#include "ddspin/mfqf.hpp"
#include "ddspin/model.hpp"

namespace ddspin {

enum class SolverTier { MF, MFQF, Exact };
enum class SweepProtocol { ColdStart, WarmForward, WarmBackward, BothDirections };
enum class SweepDirection { Cold, Forward, Backward };

std::string to_string(SolverTier t);
std::string to_string(SweepProtocol p);
std::string to_string(SweepDirection d);

/// Per-point solver controls shared by all tiers.
struct SolverSettings {
    double t_final = 400.0; // initial integration horizon per point
    double t_max = 6400.0;  // horizon doubles up to this cap near slow points
    // the steady-state detector needs the integrator noise floor below
    // steady_tol, which requires rtol about two decades tighter
    double rtol = 1e-10;
    double atol = 1e-12;
    double steady_tol = 1e-10;
    double exact_tol = 1e-10; // steady-state residual for the exact tier
    int max_sites_exact = 10;
    bool use_fc_reduced = true;
    bool with_spectrum = false; // also compute the spectral edge (exact tier)
    int spectrum_count = 4;
    CorrelationFitOptions corr_fit;
    RelaxationFitOptions relax_fit;
};

struct SweepPlan {
    SolverTier tier = SolverTier::MF;
    ModelParams params;
    LatticeSpec lattice = LatticeSpec::chain(3);
    SweepParameter parameter = SweepParameter::Delta;
    std::vector<double> grid; // strictly increasing
    SweepProtocol protocol = SweepProtocol::BothDirections;
    SolverSettings solver;
    int threads = 1;

    void validate() const;
    std::vector<SweepDirection> directions() const;
};

std::vector<double> make_grid(double start, double stop, int points);

/// Converged (or best-effort) steady state at one parameter point. Fit
/// failures and tier-inapplicable observables are stored as NaN.
struct SteadyStateRecord {
    ModelParams params;
    double parameter = 0.0;
    SweepDirection direction = SweepDirection::Cold;
    Bloch mu_s = Bloch::Zero();
    bool converged = false;
    double kappa = std::nan("");
    std::array<double, kNumPairs> lambda{};
    std::array<double, kNumPairs> sigma{};
    double b_x = std::nan("");
    // runtime metadata (deterministic; not part of the CSV schema)
    double t_reached = 0.0;
    long steps = 0;
    double residual = std::nan("");
    std::string note;
    // exact tier extras for export
    std::optional<MagnetizationDistribution> distribution;
    std::vector<Complex> spectrum;

    SteadyStateRecord() {
        lambda.fill(std::nan(""));
        sigma.fill(std::nan(""));
    }
};

struct SweepResult {
    SweepPlan plan;
    std::vector<SteadyStateRecord> records; // grouped by direction, grid order
    bool all_converged = true;
};

SweepResult run_sweep(const SweepPlan& plan);

/// Steady-state branches resolved from a both-directions sweep.
struct BranchDiagram {
    SweepParameter parameter = SweepParameter::Delta;
    std::vector<double> grid;
    std::vector<int> cluster_counts; // converged records clustered at each point
    std::vector<std::pair<double, double>> bistable_intervals;
    std::vector<std::pair<double, SweepDirection>> excluded; // unconverged records
    double merge_tol = 1e-4;
};

BranchDiagram detect_branches(const SweepResult& sweep, double merge_tol = 1e-4);

/// Deterministic persistence: a records CSV with a fixed schema plus a JSON
/// sidecar echoing the plan and solver settings. Returns the files written.
std::vector<std::string> persist_results(const SweepResult& sweep, const std::string& out_dir,
                                         const std::string& prefix);

std::vector<std::string> persist_diagram(const BranchDiagram& diagram, const std::string& out_dir,
                                         const std::string& prefix);

struct LoadedRecords {
    std::vector<SteadyStateRecord> records;
    std::string tier;
    std::string kind;
    int dim = 0;
    int connectivity = 0;
};

LoadedRecords load_records_csv(const std::string& path);

} // namespace ddspin
