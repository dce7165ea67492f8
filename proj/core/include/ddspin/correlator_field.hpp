#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ddspin/model.hpp"

namespace ddspin {

/// Index order of the six independent components of a symmetric 3x3
/// correlator matrix.
enum PairIndex : int { PXX = 0, PYY = 1, PZZ = 2, PXY = 3, PXZ = 4, PYZ = 5 };
inline constexpr int kNumPairs = 6;

// (a, b) with a,b in {0,1,2} -> PairIndex
int pair_index(int a, int b);

/// Precomputed displacement bookkeeping for a translation-invariant correlator
/// field on a periodic box (or the single "any other site" class of the
/// fully-connected lattice). Displacements are stored wrapped into the
/// symmetric box [-L_i/2, L_i/2) per axis; the origin is never stored.
class DisplacementTable {
  public:
    static std::shared_ptr<const DisplacementTable> build(const LatticeSpec& lat);

    const LatticeSpec& lattice() const { return lattice_; }
    bool fc_mode() const { return fc_mode_; }
    int n_disp() const { return n_disp_; }
    int dim() const { return dim_; }
    int z() const { return z_; }
    int nn_unit() const { return nn_unit_; }             // index of the +x unit displacement
    int fc_sum_multiplicity() const { return fc_mult_; } // FC neighbor-sum weight (Z-1)

    const std::vector<Displacement>& coords() const { return coords_; }
    bool nn(int i) const { return is_nn_[i] != 0; }
    double z_minus_delta(int i) const { return z_minus_delta_[i]; }
    int inversion(int i) const { return inversion_[i]; }

    // 2*dim entries per displacement; -1 marks a neighbor that wraps onto the
    // origin (excluded from all neighbor sums).
    int neighbor(int i, int slot) const { return neighbors_[size_t(i) * n_slots_ + slot]; }
    int n_slots() const { return n_slots_; }

    // index of a (possibly unwrapped) displacement; -1 for the origin
    int index_of(const Displacement& r) const;

    // displacement indices (r, 0, ..., 0) for r = 1 .. L_axis-1, in order
    std::vector<int> axis_ray(int axis) const;

  private:
    DisplacementTable() = default;
    LatticeSpec lattice_ = LatticeSpec::chain(3);
    bool fc_mode_ = false;
    int n_disp_ = 0;
    int dim_ = 0;
    int z_ = 0;
    int nn_unit_ = 0;
    int fc_mult_ = 0;
    int n_slots_ = 0;
    std::vector<Displacement> coords_;
    std::vector<std::uint8_t> is_nn_;
    std::vector<double> z_minus_delta_;
    std::vector<int> neighbors_;
    std::vector<int> inversion_;
    std::vector<int> flat_to_index_;
    std::vector<int> lo_; // per-axis lower bound of the wrapped box
};

/// Connected two-point correlators eta_ab(R) for all stored displacements,
/// stored as six components per displacement. The zero displacement is not
/// representable. Matrix symmetry eta_ab = eta_ba is structural.
class CorrelatorField {
  public:
    explicit CorrelatorField(std::shared_ptr<const DisplacementTable> table)
        : table_(std::move(table)), data_(size_t(table_->n_disp()) * kNumPairs, 0.0) {}

    const DisplacementTable& table() const { return *table_; }
    std::shared_ptr<const DisplacementTable> table_ptr() const { return table_; }
    int n_disp() const { return table_->n_disp(); }

    double& at(int disp_index, int pair) { return data_[size_t(disp_index) * kNumPairs + pair]; }
    double at(int disp_index, int pair) const {
        return data_[size_t(disp_index) * kNumPairs + pair];
    }
    // throws on the zero displacement
    double at(const Displacement& r, int a, int b) const;
    double& at(const Displacement& r, int a, int b);

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double max_abs() const;
    // largest |eta(R) - eta(-R)| over all components
    double inversion_asymmetry() const;

  private:
    std::shared_ptr<const DisplacementTable> table_;
    std::vector<double> data_;
};

} // namespace ddspin
