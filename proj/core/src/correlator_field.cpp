#include "ddspin/correlator_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ddspin {

int pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == 0 && b == 0) return PXX;
    if (a == 1 && b == 1) return PYY;
    if (a == 2 && b == 2) return PZZ;
    if (a == 0 && b == 1) return PXY;
    if (a == 0 && b == 2) return PXZ;
    if (a == 1 && b == 2) return PYZ;
    throw std::invalid_argument("pair_index: components must be in {0,1,2}");
}

std::shared_ptr<const DisplacementTable> DisplacementTable::build(const LatticeSpec& lat) {
    auto t = std::shared_ptr<DisplacementTable>(new DisplacementTable());
    t->lattice_ = lat;
    t->z_ = lat.connectivity();

    switch (lat.geometry()) {
        case Geometry::FullyConnected: {
            // permutation symmetry leaves a single off-site correlator class
            t->fc_mode_ = true;
            t->n_disp_ = 1;
            t->dim_ = 1;
            t->coords_ = {{1}};
            t->is_nn_ = {1};
            t->z_minus_delta_ = {double(t->z_ - 1)};
            t->inversion_ = {0};
            t->nn_unit_ = 0;
            t->fc_mult_ = lat.num_sites() - 2; // neighbors of R other than the origin
            t->n_slots_ = 0;
            return t;
        }
        case Geometry::Chain:
            if (lat.boundary() != Boundary::Periodic)
                throw std::invalid_argument(
                    "DisplacementTable: open chains are not translation invariant");
            break;
        case Geometry::HypercubicPeriodic:
            break;
        default:
            throw std::invalid_argument(
                "DisplacementTable: unsupported lattice geometry for correlator fields");
    }

    const std::vector<int>& dims = lat.sizes();
    const int d = static_cast<int>(dims.size());
    t->dim_ = d;
    t->n_slots_ = 2 * d;

    t->lo_.resize(d);
    std::vector<int> extent(d);
    int box = 1;
    for (int i = 0; i < d; ++i) {
        t->lo_[i] = -(dims[i] / 2);
        extent[i] = dims[i];
        box *= dims[i];
    }
    t->n_disp_ = box - 1;
    t->flat_to_index_.assign(box, -1);

    // row-major enumeration of the wrapped box, skipping the origin
    auto flatten = [&](const Displacement& c) {
        int f = 0;
        for (int i = 0; i < d; ++i) f = f * extent[i] + (c[i] - t->lo_[i]);
        return f;
    };

    Displacement c(d);
    std::vector<int> cursor(d, 0);
    t->coords_.reserve(t->n_disp_);
    for (int f = 0; f < box; ++f) {
        for (int i = 0; i < d; ++i) c[i] = t->lo_[i] + cursor[i];
        const bool origin = std::all_of(c.begin(), c.end(), [](int x) { return x == 0; });
        if (!origin) {
            t->flat_to_index_[flatten(c)] = static_cast<int>(t->coords_.size());
            t->coords_.push_back(c);
        }
        for (int i = d - 1; i >= 0; --i) {
            if (++cursor[i] < extent[i]) break;
            cursor[i] = 0;
        }
    }

    const int n = t->n_disp_;
    t->is_nn_.resize(n);
    t->z_minus_delta_.resize(n);
    t->inversion_.resize(n);
    t->neighbors_.resize(size_t(n) * t->n_slots_);

    for (int i = 0; i < n; ++i) {
        const Displacement& r = t->coords_[i];
        int dist = 0;
        for (int k = 0; k < d; ++k) dist += std::min(std::abs(r[k]), dims[k] - std::abs(r[k]));
        t->is_nn_[i] = (dist == 1) ? 1 : 0;
        t->z_minus_delta_[i] = double(t->z_) - double(t->is_nn_[i]);

        Displacement w = wrap(lat, [&] {
            Displacement m(d);
            for (int k = 0; k < d; ++k) m[k] = -r[k];
            return m;
        }());
        t->inversion_[i] = t->flat_to_index_[flatten(w)];

        int slot = 0;
        for (int ax = 0; ax < d; ++ax) {
            for (int step : {+1, -1}) {
                Displacement nb = r;
                nb[ax] += step;
                nb = wrap(lat, nb);
                t->neighbors_[size_t(i) * t->n_slots_ + slot] = t->flat_to_index_[flatten(nb)];
                ++slot;
            }
        }
    }

    Displacement unit(d, 0);
    unit[0] = 1;
    t->nn_unit_ = t->flat_to_index_[flatten(unit)];
    return t;
}

int DisplacementTable::index_of(const Displacement& r) const {
    const Displacement w = wrap(lattice_, r);
    if (fc_mode_) return w[0] == 0 ? -1 : 0;
    int f = 0;
    for (int i = 0; i < dim_; ++i) f = f * lattice_.sizes()[i] + (w[i] - lo_[i]);
    return flat_to_index_[f];
}

std::vector<int> DisplacementTable::axis_ray(int axis) const {
    if (fc_mode_) return {0};
    if (axis < 0 || axis >= dim_) throw std::invalid_argument("axis_ray: bad axis");
    std::vector<int> out;
    const int l = lattice_.sizes()[axis];
    for (int r = 1; r < l; ++r) {
        Displacement c(dim_, 0);
        c[axis] = r;
        out.push_back(index_of(c));
    }
    return out;
}

double CorrelatorField::at(const Displacement& r, int a, int b) const {
    const int i = table_->index_of(r);
    if (i < 0) throw std::invalid_argument("CorrelatorField: correlators are defined for R != 0");
    return at(i, pair_index(a, b));
}

double& CorrelatorField::at(const Displacement& r, int a, int b) {
    const int i = table_->index_of(r);
    if (i < 0) throw std::invalid_argument("CorrelatorField: correlators are defined for R != 0");
    return at(i, pair_index(a, b));
}

double CorrelatorField::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double CorrelatorField::inversion_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < n_disp(); ++i) {
        const int j = table_->inversion(i);
        for (int c = 0; c < kNumPairs; ++c) m = std::max(m, std::abs(at(i, c) - at(j, c)));
    }
    return m;
}

} // namespace ddspin
