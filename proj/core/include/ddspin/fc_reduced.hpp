#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "ddspin/lindblad.hpp"
#include "ddspin/model.hpp"

namespace ddspin {

/// Exact solver for the fully-connected lattice restricted to the
/// permutation-symmetric operator sector.
///
/// A permutation-invariant operator is a combination of symmetrized products
/// of the four single-site matrix units {u, v, w, d} = {|0><0|, |0><1|,
/// |1><0|, |1><1|}, labeled by the multiset (n_u, n_v, n_w, n_d) with total N.
/// The sector dimension is (N+3 choose 3), so N = 10 costs a 286-dimensional
/// dense solve instead of a 4^10-dimensional sparse one. The Liouvillian maps
/// the sector to itself because every term of the generator is site-symmetric.
class FcReducedSolver {
  public:
    FcReducedSolver(int n_sites, const ModelParams& p);

    int n_sites() const { return n_; }
    int basis_dim() const { return dim_; }
    const MatrixXcd& liouvillian() const { return liouv_; }

    struct SteadyState {
        VectorXcd coeffs;        // trace-normalized symmetric-sector coefficients
        double residual = 0.0;   // ||L c||_inf after normalization
        double singular_gap = 0.0; // second-smallest singular value of L
        bool converged = false;
        bool degenerate = false; // second near-null singular direction
    };
    SteadyState steady_state(double tol = 1e-10, double degeneracy_tol = 1e-8) const;

    // uniform site magnetization of the state described by `coeffs`
    Bloch bloch_vector(const VectorXcd& coeffs) const;

    // distribution of the per-site magnetization along 'x', 'y' or 'z'
    MagnetizationDistribution distribution(const VectorXcd& coeffs, char axis) const;

    // eigenvalues of the reduced generator with the largest real parts
    std::vector<Complex> spectrum_edge(int count) const;

    Complex trace_of(const VectorXcd& coeffs) const;

  private:
    using Mat4 = Eigen::Matrix4cd;

    // lift of a single-site superoperator s (4x4 on the matrix-unit basis)
    // to the symmetric sector: the action of sum_R s_R.
    MatrixXcd lift(const Mat4& s) const;

    int index_of(const std::array<int, 4>& n) const;

    int n_ = 0;
    int dim_ = 0;
    std::vector<std::array<int, 4>> basis_;
    std::vector<int> lookup_;
    MatrixXcd liouv_;
    ModelParams params_;
};

} // namespace ddspin
