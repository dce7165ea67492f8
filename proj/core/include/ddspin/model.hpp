#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ddspin {

inline constexpr const char* kVersion = "ddspin 0.1.0";

/// Spin-spin interaction variant. XY is the flip-flop (hopping) coupling J,
/// Ising is the zz coupling J_z.
enum class InteractionKind { XY, Ising };

std::string to_string(InteractionKind k);

/// Physical couplings, all in units of the loss rate gamma (gamma = 1 is the
/// canonical choice and fixes the frequency and time units).
struct ModelParams {
    double delta = 0.0;     // drive detuning
    double omega = 0.0;     // Rabi frequency
    double coupling = 0.0;  // J for XY, J_z for Ising
    double gamma = 1.0;     // local spin-loss rate, > 0
    InteractionKind kind = InteractionKind::XY;

    // Throws std::invalid_argument if any field is non-finite or gamma <= 0.
    void validate() const;

    // Coupling as it enters the magnetization equations: the Ising model obeys
    // the same mu equations with J replaced by -J_z.
    double mf_coupling() const {
        return kind == InteractionKind::XY ? coupling : -coupling;
    }
};

/// Mean magnetization vector (mu_x, mu_y, mu_z) of a site.
using Bloch = Eigen::Vector3d;

// A qubit state must satisfy |mu| <= 1 up to tolerance.
bool is_physical(const Bloch& mu, double tol = 1e-9);

/// Lattice displacement, wrapped componentwise into the symmetric box
/// [-L_i/2, L_i/2). For chains this is a 1-component vector; the
/// fully-connected lattice uses the scalar classes 0 ("same site") and
/// 1 ("any other site").
using Displacement = std::vector<int>;

enum class Geometry {
    FullyConnected,     // all-to-all, Z = N - 1
    HypercubicPeriodic, // D-dimensional periodic box, Z = 2D
    Chain,              // 1D, periodic or open boundary
    Parallelogram2D,    // small 2D periodic tiling with a shear offset
};

enum class Boundary { Periodic, Open };

/// Lattice geometry plus the derived connectivity. Immutable after
/// construction; all factory functions validate their arguments.
class LatticeSpec {
  public:
    static LatticeSpec fully_connected(int n_sites);
    static LatticeSpec hypercubic(std::vector<int> sizes); // L_i >= 3
    static LatticeSpec chain(int n_sites, Boundary bc = Boundary::Periodic);
    // l1 x l2 sites; crossing the second-axis boundary shifts the first
    // coordinate by `shear` (used for small exact-solver tilings only).
    static LatticeSpec parallelogram(int l1, int l2, int shear);

    Geometry geometry() const { return geometry_; }
    Boundary boundary() const { return boundary_; }
    int connectivity() const { return connectivity_; }
    int num_sites() const { return num_sites_; }
    int dim() const { return static_cast<int>(sizes_.size()); }
    const std::vector<int>& sizes() const { return sizes_; }
    int shear() const { return shear_; }

    // Unordered nearest-neighbor pairs (i, j), i < j, each bond once.
    std::vector<std::pair<int, int>> nn_pairs() const;

    std::string describe() const;

  private:
    LatticeSpec() = default;
    Geometry geometry_ = Geometry::Chain;
    Boundary boundary_ = Boundary::Periodic;
    std::vector<int> sizes_;   // per-axis extent (chain/FC: {N})
    int num_sites_ = 0;
    int connectivity_ = 0;
    int shear_ = 0;
};

// Wrap a displacement into the symmetric box; idempotent. For FC lattices the
// result is the class label 0 or 1.
Displacement wrap(const LatticeSpec& lat, const Displacement& r);

// Wrapped Manhattan norm; this is the graph distance used for nearest-neighbor
// identification on periodic hypercubic lattices.
int graph_distance(const LatticeSpec& lat, const Displacement& r);

// True iff ||r|| = 1 under periodic wrapping. Rejects r = 0.
bool is_nearest_neighbor(const LatticeSpec& lat, const Displacement& r);

// All displacements r' with ||r' - r|| = 1, wrapped; size 2D on hypercubic
// lattices (may contain the zero displacement). Rejects displacements whose
// length does not match the lattice dimension.
std::vector<Displacement> neighbors(const LatticeSpec& lat, const Displacement& r);

} // namespace ddspin
