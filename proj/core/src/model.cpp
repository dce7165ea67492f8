#include "ddspin/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddspin {

std::string to_string(InteractionKind k) {
    return k == InteractionKind::XY ? "xy" : "ising";
}

void ModelParams::validate() const {
    if (!std::isfinite(delta) || !std::isfinite(omega) || !std::isfinite(coupling) ||
        !std::isfinite(gamma)) {
        throw std::invalid_argument("ModelParams: all fields must be finite");
    }
    if (gamma <= 0.0) {
        throw std::invalid_argument("ModelParams: gamma must be > 0");
    }
}

bool is_physical(const Bloch& mu, double tol) {
    return mu.allFinite() && mu.squaredNorm() <= 1.0 + tol;
}

LatticeSpec LatticeSpec::fully_connected(int n_sites) {
    if (n_sites < 2) throw std::invalid_argument("fully_connected: need at least 2 sites");
    LatticeSpec s;
    s.geometry_ = Geometry::FullyConnected;
    s.sizes_ = {n_sites};
    s.num_sites_ = n_sites;
    s.connectivity_ = n_sites - 1;
    return s;
}

LatticeSpec LatticeSpec::hypercubic(std::vector<int> sizes) {
    if (sizes.empty()) throw std::invalid_argument("hypercubic: need at least one axis");
    int n = 1;
    for (int l : sizes) {
        if (l < 3) throw std::invalid_argument("hypercubic: every linear size must be >= 3");
        n *= l;
    }
    LatticeSpec s;
    s.geometry_ = Geometry::HypercubicPeriodic;
    s.sizes_ = std::move(sizes);
    s.num_sites_ = n;
    s.connectivity_ = 2 * static_cast<int>(s.sizes_.size());
    return s;
}

LatticeSpec LatticeSpec::chain(int n_sites, Boundary bc) {
    if (n_sites < 1) throw std::invalid_argument("chain: need at least 1 site");
    if (bc == Boundary::Periodic && n_sites < 3)
        throw std::invalid_argument("chain: periodic chain needs at least 3 sites");
    LatticeSpec s;
    s.geometry_ = Geometry::Chain;
    s.boundary_ = bc;
    s.sizes_ = {n_sites};
    s.num_sites_ = n_sites;
    s.connectivity_ = std::min(2, n_sites - 1); // bulk coordination
    return s;
}

LatticeSpec LatticeSpec::parallelogram(int l1, int l2, int shear) {
    if (l1 < 2 || l2 < 1) throw std::invalid_argument("parallelogram: need l1 >= 2, l2 >= 1");
    LatticeSpec s;
    s.geometry_ = Geometry::Parallelogram2D;
    s.sizes_ = {l1, l2};
    s.num_sites_ = l1 * l2;
    s.connectivity_ = 4;
    s.shear_ = shear;
    return s;
}

std::vector<std::pair<int, int>> LatticeSpec::nn_pairs() const {
    std::set<std::pair<int, int>> pairs;
    auto add = [&pairs](int a, int b) {
        if (a == b) return;
        pairs.emplace(std::min(a, b), std::max(a, b));
    };
    switch (geometry_) {
        case Geometry::FullyConnected:
            for (int i = 0; i < num_sites_; ++i)
                for (int j = i + 1; j < num_sites_; ++j) pairs.emplace(i, j);
            break;
        case Geometry::Chain: {
            const int n = num_sites_;
            for (int i = 0; i + 1 < n; ++i) add(i, i + 1);
            if (boundary_ == Boundary::Periodic) add(n - 1, 0);
            break;
        }
        case Geometry::HypercubicPeriodic: {
            const int d = dim();
            // row-major site index over the box
            std::vector<int> stride(d, 1);
            for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * sizes_[k + 1];
            std::vector<int> c(d, 0);
            for (int site = 0; site < num_sites_; ++site) {
                for (int ax = 0; ax < d; ++ax) {
                    std::vector<int> c2 = c;
                    c2[ax] = (c[ax] + 1) % sizes_[ax];
                    int other = 0;
                    for (int k = 0; k < d; ++k) other += c2[k] * stride[k];
                    add(site, other);
                }
                for (int k = d - 1; k >= 0; --k) {
                    if (++c[k] < sizes_[k]) break;
                    c[k] = 0;
                }
            }
            break;
        }
        case Geometry::Parallelogram2D: {
            const int l1 = sizes_[0], l2 = sizes_[1];
            auto idx = [&](int i, int j) {
                // wrapping across the j boundary shifts i by the shear
                int qj = static_cast<int>(std::floor(double(j) / l2));
                j -= qj * l2;
                i += qj * shear_;
                i = ((i % l1) + l1) % l1;
                return i * l2 + j;
            };
            for (int i = 0; i < l1; ++i) {
                for (int j = 0; j < l2; ++j) {
                    const int here = i * l2 + j;
                    add(here, idx(i + 1, j));
                    add(here, idx(i, j + 1));
                }
            }
            break;
        }
    }
    return {pairs.begin(), pairs.end()};
}

std::string LatticeSpec::describe() const {
    std::ostringstream os;
    switch (geometry_) {
        case Geometry::FullyConnected: os << "FC(N=" << num_sites_ << ")"; break;
        case Geometry::Chain:
            os << "chain(N=" << num_sites_
               << (boundary_ == Boundary::Periodic ? ",periodic)" : ",open)");
            break;
        case Geometry::HypercubicPeriodic: {
            os << "hypercubic(";
            for (size_t i = 0; i < sizes_.size(); ++i) os << (i ? "x" : "") << sizes_[i];
            os << ")";
            break;
        }
        case Geometry::Parallelogram2D:
            os << "parallelogram(" << sizes_[0] << "x" << sizes_[1] << ",shear=" << shear_ << ")";
            break;
    }
    return os.str();
}

namespace {

int wrap_coord(int x, int l) {
    // symmetric box [-l/2, l/2)
    x = ((x % l) + l) % l; // -> [0, l)
    if (x >= (l + 1) / 2) x -= l;
    return x;
}

void check_dim(const LatticeSpec& lat, const Displacement& r) {
    const size_t want = (lat.geometry() == Geometry::FullyConnected) ? 1 : lat.sizes().size();
    if (r.size() != want) {
        throw std::invalid_argument("displacement has " + std::to_string(r.size()) +
                                    " components, lattice expects " + std::to_string(want));
    }
}

} // namespace

Displacement wrap(const LatticeSpec& lat, const Displacement& r) {
    check_dim(lat, r);
    if (lat.geometry() == Geometry::FullyConnected) {
        // only the classes "same site" (0) and "any other site" (1) exist
        return {r[0] == 0 ? 0 : 1};
    }
    if (lat.geometry() == Geometry::Chain && lat.boundary() == Boundary::Open) {
        return r; // no wrapping on open chains
    }
    Displacement w(r.size());
    for (size_t i = 0; i < r.size(); ++i) w[i] = wrap_coord(r[i], lat.sizes()[i]);
    return w;
}

int graph_distance(const LatticeSpec& lat, const Displacement& r) {
    const Displacement w = wrap(lat, r);
    if (lat.geometry() == Geometry::FullyConnected) return w[0] == 0 ? 0 : 1;
    int d = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        int a = std::abs(w[i]);
        if (lat.geometry() != Geometry::Chain || lat.boundary() == Boundary::Periodic)
            a = std::min(a, lat.sizes()[i] - a);
        d += a;
    }
    return d;
}

bool is_nearest_neighbor(const LatticeSpec& lat, const Displacement& r) {
    const Displacement w = wrap(lat, r);
    if (std::all_of(w.begin(), w.end(), [](int x) { return x == 0; })) {
        throw std::invalid_argument("is_nearest_neighbor: zero displacement");
    }
    return graph_distance(lat, w) == 1;
}

std::vector<Displacement> neighbors(const LatticeSpec& lat, const Displacement& r) {
    const Displacement w = wrap(lat, r);
    std::vector<Displacement> out;
    if (lat.geometry() == Geometry::FullyConnected) {
        // sites at distance 1 from the origin class: every other site
        if (w[0] == 0) {
            out.push_back({1});
        } else {
            out.push_back({0});
            if (lat.num_sites() >= 3) out.push_back({1});
        }
        return out;
    }
    for (size_t ax = 0; ax < w.size(); ++ax) {
        for (int step : {+1, -1}) {
            Displacement n = w;
            n[ax] += step;
            out.push_back(wrap(lat, n));
        }
    }
    return out;
}

} // namespace ddspin
