#include "ddspin/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddspin/parallel.hpp"

namespace ddspin {

Bloch mf_rhs_with_feedback(const Bloch& mu, const ModelParams& p, int z, double eta_xz1,
                           double eta_yz1) {
    const double c = p.mf_coupling() * z;
    const double g = p.gamma;
    Bloch out;
    out[0] = -c * (mu[1] * mu[2] + eta_yz1) - p.delta * mu[1] - 0.5 * g * mu[0];
    out[1] = c * (mu[0] * mu[2] + eta_xz1) - 2.0 * p.omega * mu[2] + p.delta * mu[0] -
             0.5 * g * mu[1];
    out[2] = 2.0 * p.omega * mu[1] - g * (1.0 + mu[2]);
    return out;
}

Bloch mf_rhs(const Bloch& mu, const ModelParams& p, int z) {
    return mf_rhs_with_feedback(mu, p, z, 0.0, 0.0);
}

Eigen::Matrix3d mf_jacobian(const Bloch& mu, const ModelParams& p, int z) {
    const double c = p.mf_coupling() * z;
    const double g = p.gamma;
    Eigen::Matrix3d j;
    j << -0.5 * g, -c * mu[2] - p.delta, -c * mu[1],
         c * mu[2] + p.delta, -0.5 * g, c * mu[0] - 2.0 * p.omega,
         0.0, 2.0 * p.omega, -g;
    return j;
}

MfTrajectory mf_integrate(const Bloch& mu0, const ModelParams& p, int z, double t_final,
                          const OdeOptions& opt, double record_dt) {
    p.validate();
    if (t_final <= 0) throw std::invalid_argument("mf_integrate: t_final must be > 0");

    MfTrajectory traj;
    traj.times.push_back(0.0);
    traj.mu.push_back(mu0);
    double next_record = record_dt > 0 ? record_dt : std::numeric_limits<double>::infinity();

    auto rhs = [&](double, const Eigen::Vector3d& y, Eigen::Vector3d& dy) {
        dy = mf_rhs(y, p, z);
    };
    auto observer = [&](double t, const Eigen::Vector3d& y, const Eigen::Vector3d&) {
        if (t >= next_record) {
            traj.times.push_back(t);
            traj.mu.push_back(y);
            while (next_record <= t) next_record += record_dt;
        }
        return true;
    };

    auto res = integrate_dopri5<Eigen::Vector3d>(rhs, mu0, 0.0, t_final, opt, observer);
    traj.status = res.status;
    traj.message = res.message;
    if (traj.times.back() != res.t_final) {
        traj.times.push_back(res.t_final);
        traj.mu.push_back(res.state);
    }
    return traj;
}

std::string to_string(SweepParameter sp) {
    switch (sp) {
        case SweepParameter::Delta: return "delta";
        case SweepParameter::Omega: return "omega";
        case SweepParameter::Coupling: return "coupling";
    }
    return "?";
}

ModelParams with_parameter(ModelParams p, SweepParameter sp, double value) {
    switch (sp) {
        case SweepParameter::Delta: p.delta = value; break;
        case SweepParameter::Omega: p.omega = value; break;
        case SweepParameter::Coupling: p.coupling = value; break;
    }
    return p;
}

namespace {

// Newton iteration with step halving; returns the converged point or nullopt.
std::optional<Bloch> newton_root(Bloch mu, const ModelParams& p, int z,
                                 const FixedPointOptions& opt) {
    Bloch f = mf_rhs(mu, p, z);
    double fn = f.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_newton_iter; ++it) {
        if (fn < opt.residual_tol) return mu;
        const Eigen::Matrix3d j = mf_jacobian(mu, p, z);
        const Eigen::Vector3d step = j.fullPivLu().solve(-f);
        if (!step.allFinite()) return std::nullopt;
        double scale = 1.0;
        for (int h = 0; h < 6; ++h) {
            const Bloch trial = mu + scale * step;
            const Bloch ft = mf_rhs(trial, p, z);
            const double ftn = ft.lpNorm<Eigen::Infinity>();
            if (ftn < fn || h == 5) {
                mu = trial;
                f = ft;
                fn = ftn;
                break;
            }
            scale *= 0.5;
        }
        if (mu.lpNorm<Eigen::Infinity>() > 10.0) return std::nullopt; // diverged
    }
    return fn < opt.residual_tol ? std::optional<Bloch>(mu) : std::nullopt;
}

FixedPoint classify(const Bloch& mu, const ModelParams& p, int z, double marginal_band) {
    FixedPoint fp;
    fp.mu = mu;
    Eigen::EigenSolver<Eigen::Matrix3d> es(mf_jacobian(mu, p, z));
    double max_re = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        fp.jacobian_eigenvalues[i] = es.eigenvalues()[i];
        max_re = std::max(max_re, es.eigenvalues()[i].real());
    }
    if (std::abs(max_re) < marginal_band)
        fp.stability = Stability::Marginal;
    else
        fp.stability = max_re < 0 ? Stability::Stable : Stability::Unstable;
    return fp;
}

} // namespace

FixedPointSet mf_fixed_points(const ModelParams& p, int z, const FixedPointOptions& opt) {
    p.validate();
    if (z < 1) throw std::invalid_argument("mf_fixed_points: connectivity must be >= 1");

    std::vector<Bloch> roots;
    const int n = opt.seeds_per_axis;
    bool any_converged = false;
    for (int ix = 0; ix < n; ++ix) {
        for (int iy = 0; iy < n; ++iy) {
            for (int iz = 0; iz < n; ++iz) {
                Bloch seed(-1.0 + 2.0 * (ix + 0.5) / n, -1.0 + 2.0 * (iy + 0.5) / n,
                           -1.0 + 2.0 * (iz + 0.5) / n);
                if (seed.squaredNorm() > 1.0 + 1e-12) continue; // Bloch ball only
                auto root = newton_root(seed, p, z, opt);
                if (!root) continue;
                any_converged = true;
                if ((*root).squaredNorm() > 1.0 + 2.0 * opt.physical_tol) continue;
                bool dup = false;
                for (const auto& r : roots) {
                    if ((r - *root).lpNorm<Eigen::Infinity>() < opt.dedup_tol) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) roots.push_back(*root);
            }
        }
    }
    if (!any_converged) {
        throw std::runtime_error("mf_fixed_points: Newton failed to converge from every seed");
    }

    FixedPointSet out;
    for (const auto& r : roots) out.points.push_back(classify(r, p, z, opt.marginal_band));
    std::sort(out.points.begin(), out.points.end(), [](const FixedPoint& a, const FixedPoint& b) {
        if (a.mu[2] != b.mu[2]) return a.mu[2] < b.mu[2];
        return a.mu[0] < b.mu[0];
    });
    for (const auto& fp : out.points)
        if (fp.stability == Stability::Stable) ++out.stable_count;
    out.even_count_warning = out.points.size() % 2 == 0;
    return out;
}

namespace {

int stable_count_at(const ModelParams& base, int z, SweepParameter axis, double value,
                    const FixedPointOptions& opt) {
    return mf_fixed_points(with_parameter(base, axis, value), z, opt).stable_count;
}

// Bisect for the edge of the bistable indicator between values a (inside) and
// b (outside) until the bracket is narrower than res.
double refine_edge(const ModelParams& base, int z, SweepParameter axis, double a, double b,
                   const FixedPointOptions& opt, double res) {
    while (std::abs(b - a) > res) {
        const double m = 0.5 * (a + b);
        if (stable_count_at(base, z, axis, m, opt) >= 2)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

} // namespace

BistabilityRegion mf_bistability_scan(const ModelParams& base, int z, SweepParameter axis,
                                      const std::vector<double>& grid,
                                      const BistabilityScanOptions& opt) {
    if (grid.size() < 2) throw std::invalid_argument("mf_bistability_scan: need >= 2 grid points");
    for (size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("mf_bistability_scan: grid must be strictly increasing");
    }

    BistabilityRegion region;
    region.parameter_axis = axis;
    region.stable_counts.assign(grid.size(), -1);
    std::vector<std::string> errors(grid.size());

    parallel_for(static_cast<int>(grid.size()), opt.n_threads, [&](int i) {
        try {
            region.stable_counts[i] = stable_count_at(base, z, axis, grid[i], opt.fixed_point);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!errors[i].empty()) region.failures.emplace_back(grid[i], errors[i]);
    }

    // maximal runs of bistable grid points, edges refined between neighbors
    const auto bistable = [&](size_t i) { return region.stable_counts[i] >= 2; };
    size_t i = 0;
    while (i < grid.size()) {
        if (!bistable(i)) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < grid.size() && bistable(j + 1)) ++j;
        double lo = grid[i];
        double hi = grid[j];
        if (i > 0 && region.stable_counts[i - 1] >= 0)
            lo = refine_edge(base, z, axis, grid[i], grid[i - 1], opt.fixed_point,
                             opt.edge_resolution);
        if (j + 1 < grid.size() && region.stable_counts[j + 1] >= 0)
            hi = refine_edge(base, z, axis, grid[j], grid[j + 1], opt.fixed_point,
                             opt.edge_resolution);
        region.intervals.emplace_back(lo, hi);
        i = j + 1;
    }
    return region;
}

} // namespace ddspin
