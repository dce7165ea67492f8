#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ddspin/model.hpp"
#include "ddspin/ode.hpp"

namespace ddspin {

using Complex = std::complex<double>;
using SparseCd = Eigen::SparseMatrix<Complex>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

/// Density matrix in the z-product basis, site 0 = most significant bit.
using DensityMatrix = MatrixXcd;

// --- elementary operators -------------------------------------------------

Eigen::Matrix2cd pauli(char axis); // 'x', 'y', 'z', '+', '-', 'n' (= sigma+ sigma-)

// op acting on `site` of an n_sites register (kron with identities elsewhere).
SparseCd site_operator(int n_sites, int site, const Eigen::Matrix2cd& op);

// Hamiltonian for the given lattice and couplings (XY hopping or Ising zz,
// plus the local detuning and drive terms).
SparseCd build_hamiltonian(const LatticeSpec& lat, const ModelParams& p);

/// Lindblad generator acting on column-stacked density matrices,
/// dim = 4^n_sites. The vectorization convention is fixed (column stacking)
/// so that superoperator golden files are stable.
struct Liouvillian {
    SparseCd op;
    int n_sites = 0;
    LatticeSpec lattice = LatticeSpec::chain(2, Boundary::Open);
    ModelParams params;

    Eigen::Index dim() const { return op.rows(); }
    int hilbert_dim() const { return 1 << n_sites; }
    VectorXcd apply(const VectorXcd& v) const { return op * v; }
};

struct LiouvillianOptions {
    int max_sites = 10; // refuse larger systems before allocating
};

Liouvillian build_liouvillian(const LatticeSpec& lat, const ModelParams& p,
                              const LiouvillianOptions& opt = {});

// --- density-matrix utilities ---------------------------------------------

VectorXcd vec(const DensityMatrix& rho);
DensityMatrix unvec(const VectorXcd& v);

// Hermiticity / unit-trace / positivity within the stated tolerances.
struct DensityMatrixCheck {
    double hermiticity_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
    bool ok(double herm_tol = 1e-10, double trace_tol = 1e-10, double eig_tol = -1e-8) const {
        return hermiticity_error < herm_tol && trace_error < trace_tol &&
               min_eigenvalue >= eig_tol;
    }
};
DensityMatrixCheck check_density_matrix(const DensityMatrix& rho);

// rho = (1 + mu.sigma)/2 per site, tensored over all sites.
DensityMatrix product_density_matrix(const std::vector<Bloch>& site_mus);

// tr(rho O)
Complex expectation(const DensityMatrix& rho, const SparseCd& op);

// Per-site magnetization (tr rho sigma_site^a for a = x,y,z).
Bloch site_bloch_vector(const DensityMatrix& rho, int n_sites, int site);

// --- steady state -----------------------------------------------------------

struct SteadyStateOptions {
    double tol = 1e-10; // required ||L rho||_inf
    // Sparse-LU inverse iteration up to this dimension; factorization fill-in
    // makes it impractical beyond 4^7, so larger systems go through the
    // Krylov-evolution route directly.
    int lu_max_dim = 20000;
    double shift = 1e-8; // spectral shift for the near-singular solve
    int max_iterations = 10;
    bool check_uniqueness = true;
    double degeneracy_tol = 1e-8;
    double evolve_t_max = 8000.0; // cap for the time-evolution route
    const VectorXcd* warm_start = nullptr;
};

struct SteadyStateResult {
    DensityMatrix rho;
    VectorXcd vec_rho;
    double residual = 0.0;
    bool converged = false;
    int null_space_dim = 1; // 2 when a second null direction was detected
    std::string method;
    std::string message;
};

/// Null vector of the Liouvillian, normalized to trace one. Inverse iteration
/// with a small spectral shift; falls back to long-time Krylov evolution when
/// the factorization route is unavailable or stagnates.
SteadyStateResult steady_state(const Liouvillian& liouv, const SteadyStateOptions& opt = {});

// --- time evolution ---------------------------------------------------------

struct RhoTrajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    OdeStatus status = OdeStatus::Done;
    std::string message;
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    bool ok() const { return status == OdeStatus::Done || status == OdeStatus::SteadyState; }
};

RhoTrajectory evolve_rho(const DensityMatrix& rho0, const Liouvillian& liouv, double t_final,
                         const std::vector<double>& record_times, const OdeOptions& opt = {});

// Krylov (Arnoldi) approximation of exp(A t) v for the sparse generator.
VectorXcd krylov_expmv(const SparseCd& a, VectorXcd v, double t, double tol = 1e-9,
                       int subspace_dim = 40);

// --- observables ------------------------------------------------------------

/// Distribution of the per-site magnetization along an axis: values
/// m_k = (N-2k)/N for k = 0..N and their probabilities.
struct MagnetizationDistribution {
    std::vector<double> values;
    std::vector<double> probabilities;
};

MagnetizationDistribution magnetization_distribution(const DensityMatrix& rho, int n_sites,
                                                     char axis);

/// Bimodality index b = 2 (P_max2 - P_min) / (P_max1 + P_max2) over the
/// ordered grid; 0 when the distribution has fewer than two local maxima.
/// Strict local maxima; exact plateaus are merged and treated as one.
double bimodality_index(const MagnetizationDistribution& dist);

// --- spectrum ---------------------------------------------------------------

struct SpectrumOptions {
    int dense_max_dim = 4100;   // full dense solve below this dimension
    int subspace_dim = 60;      // Arnoldi size for shift-invert above it
    double shift = 1e-3;
    double residual_tol = 1e-7;
};

struct SpectrumResult {
    std::vector<Complex> eigenvalues; // sorted by real part, descending
    std::vector<double> residuals;
    bool converged = true;
    std::string message;
};

/// The `count` Liouvillian eigenvalues with the largest real parts
/// (the leading one is 0); the second entry is the asymptotic decay mode.
SpectrumResult liouvillian_spectrum_edge(const Liouvillian& liouv, int count,
                                         const SpectrumOptions& opt = {});

} // namespace ddspin
