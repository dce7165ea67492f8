#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ddspin/correlator_field.hpp"
#include "ddspin/meanfield.hpp"
#include "ddspin/model.hpp"
#include "ddspin/ode.hpp"

namespace ddspin {

/// Local Hamiltonian generator acting on correlator components:
/// rows ((0, -Delta, 0), (Delta, 0, -2 Omega), (0, 2 Omega, 0)).
Eigen::Matrix3d pi_matrix(const ModelParams& p);

/// Dissipative part of the two-point equations, as a function of the bare
/// moments theta_ab and the magnetization. Output is symmetric.
Eigen::Matrix3d g_terms(const Bloch& mu, const Eigen::Matrix3d& theta, double gamma);

/// Kinetic (interaction) part of the two-point equations at displacement r,
/// for the XY and Ising couplings. `eta` supplies the connected correlators;
/// bare moments are reconstructed internally as theta = eta + mu mu.
/// Rejects the zero displacement.
Eigen::Matrix3d f_terms_xy(const Displacement& r, const Bloch& mu, const CorrelatorField& eta,
                           double coupling_j);
Eigen::Matrix3d f_terms_ising(const Displacement& r, const Bloch& mu, const CorrelatorField& eta,
                              double coupling_jz);

/// Joint state of the magnetization and the correlator field.
struct MfqfState {
    Bloch mu = Bloch(0, 0, -1);
    CorrelatorField eta;
    double time = 0.0;

    explicit MfqfState(std::shared_ptr<const DisplacementTable> table) : eta(std::move(table)) {}
};

// All spins down, no correlations.
MfqfState mfqf_cold_start(const LatticeSpec& lat);

/// Evaluator for the coupled magnetization + correlator equations on a fixed
/// lattice. Holds scratch storage; a given instance is not safe for
/// concurrent rhs() calls, but distinct instances are independent.
class MfqfSystem {
  public:
    MfqfSystem(std::shared_ptr<const DisplacementTable> table, const ModelParams& p);

    const DisplacementTable& table() const { return *table_; }
    const ModelParams& params() const { return params_; }
    int state_size() const { return 3 + kNumPairs * table_->n_disp(); }

    void pack(const MfqfState& s, Eigen::VectorXd& y) const;
    void unpack(const Eigen::VectorXd& y, double t, MfqfState& s) const;

    // dy/dt for the packed state [mu_x, mu_y, mu_z, eta(R0)..., eta(R1)...]
    void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const;

    // max |theta| seen in the most recent rhs() evaluation
    double last_theta_max() const { return last_theta_max_; }

    // spread of the nearest-neighbor eta components across all NN
    // displacements (translation invariance makes them degenerate)
    double isotropy_spread(const Eigen::VectorXd& y) const;

  private:
    std::shared_ptr<const DisplacementTable> table_;
    ModelParams params_;
    mutable std::vector<double> theta_; // scratch bare moments
    mutable double last_theta_max_ = 0.0;
};

struct MfqfOptions {
    OdeOptions ode{.rtol = 1e-8, .atol = 1e-10, .dt_initial = 1e-3, .steady_tol = 1e-10};
    double theta_bound_tol = 1e-6; // abort when |theta| exceeds 1 + tol
    double series_dt = 0.0;        // sampling cadence for the relaxation series
};

struct MfqfRunResult {
    std::vector<MfqfState> snapshots; // one per requested record time
    MfqfState final_state;
    bool steady = false; // ||d state/dt||_inf fell below the steady tolerance
    OdeStatus status = OdeStatus::Done;
    std::string message;
    long n_steps = 0;

    // coarse time series for relaxation-rate fits: d/dt |mu|^2 = 2 mu . dmu
    std::vector<double> series_t;
    std::vector<Bloch> series_mu;
    std::vector<double> series_dmu2;

    MfqfRunResult(std::shared_ptr<const DisplacementTable> table) : final_state(std::move(table)) {}
    bool ok() const { return status == OdeStatus::Done || status == OdeStatus::SteadyState; }
};

/// Integrate the closure equations from `s0` until t_final (or steady state),
/// recording snapshots at the requested absolute times.
MfqfRunResult mfqf_integrate(const MfqfState& s0, const ModelParams& p, double t_final,
                             const MfqfOptions& opt = {},
                             const std::vector<double>& record_times = {});

// Snapshot export: (time, mu) rows and per-displacement correlator rows.
void write_trajectory_csv(const std::string& path, const MfqfRunResult& run);
void write_correlator_csv(const std::string& path, const CorrelatorField& eta);

} // namespace ddspin
