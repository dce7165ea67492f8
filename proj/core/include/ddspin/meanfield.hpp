#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ddspin/model.hpp"
#include "ddspin/ode.hpp"

namespace ddspin {

/// Magnetization equations of motion in the product-state limit (all
/// correlators zero). `z` is the lattice connectivity; the coupling enters
/// only through the product J*z (Ising: -J_z*z).
Bloch mf_rhs(const Bloch& mu, const ModelParams& p, int z);

/// Same equations with the nearest-neighbor correlator feedback terms.
Bloch mf_rhs_with_feedback(const Bloch& mu, const ModelParams& p, int z,
                           double eta_xz1, double eta_yz1);

Eigen::Matrix3d mf_jacobian(const Bloch& mu, const ModelParams& p, int z);

struct MfTrajectory {
    std::vector<double> times;
    std::vector<Bloch> mu;
    OdeStatus status = OdeStatus::Done;
    std::string message;
    bool ok() const { return status == OdeStatus::Done || status == OdeStatus::SteadyState; }
    const Bloch& final_mu() const { return mu.back(); }
};

/// Integrate the meanfield equations, recording approximately every
/// `record_dt` time units (0 = record only the endpoints).
MfTrajectory mf_integrate(const Bloch& mu0, const ModelParams& p, int z, double t_final,
                          const OdeOptions& opt = {}, double record_dt = 0.0);

enum class Stability { Stable, Unstable, Marginal };

struct FixedPoint {
    Bloch mu;
    Stability stability = Stability::Unstable;
    std::array<std::complex<double>, 3> jacobian_eigenvalues{};
    bool stable() const { return stability == Stability::Stable; }
};

struct FixedPointOptions {
    int seeds_per_axis = 12;     // Newton seed grid over the Bloch ball
    int max_newton_iter = 80;
    double residual_tol = 1e-11; // accept when ||rhs||_inf below this
    double dedup_tol = 1e-7;
    double physical_tol = 1e-6;  // reject |mu| > 1 + tol
    double marginal_band = 1e-9; // |Re eig| below this -> Marginal
};

struct FixedPointSet {
    std::vector<FixedPoint> points; // sorted by mu_z, then mu_x
    int stable_count = 0;
    bool even_count_warning = false; // generic parameters should give an odd count
};

/// All real fixed points of the meanfield flow, classified by the Jacobian
/// spectrum. Throws std::runtime_error if no Newton seed converges.
FixedPointSet mf_fixed_points(const ModelParams& p, int z, const FixedPointOptions& opt = {});

enum class SweepParameter { Delta, Omega, Coupling };

std::string to_string(SweepParameter sp);
ModelParams with_parameter(ModelParams p, SweepParameter sp, double value);

struct BistabilityRegion {
    SweepParameter parameter_axis = SweepParameter::Delta;
    std::vector<std::pair<double, double>> intervals; // disjoint, sorted
    std::vector<int> stable_counts;                   // one per grid point
    std::vector<std::pair<double, std::string>> failures;
};

struct BistabilityScanOptions {
    FixedPointOptions fixed_point;
    double edge_resolution = 1e-4; // bisection stops at this parameter width
    int n_threads = 1;
};

/// Mark each grid point by its stable-fixed-point count and return the
/// bisection-refined intervals where at least two stable points coexist.
/// The grid must be strictly increasing.
BistabilityRegion mf_bistability_scan(const ModelParams& base, int z, SweepParameter axis,
                                      const std::vector<double>& grid,
                                      const BistabilityScanOptions& opt = {});

} // namespace ddspin
