#include "ddspin/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ddspin {

namespace {
const Complex kI(0.0, 1.0);

SparseCd sparse2(const Eigen::Matrix2cd& m) {
    SparseCd s(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (m(i, j) != Complex(0, 0)) s.insert(i, j) = m(i, j);
    s.makeCompressed();
    return s;
}

SparseCd sparse_identity(Eigen::Index n) {
    SparseCd id(n, n);
    id.setIdentity();
    return id;
}
} // namespace

Eigen::Matrix2cd pauli(char axis) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    switch (axis) {
        case 'x': m << 0, 1, 1, 0; break;
        case 'y': m << 0, -kI, kI, 0; break;
        case 'z': m << 1, 0, 0, -1; break;
        case '+': m << 0, 1, 0, 0; break; // |up><down|
        case '-': m << 0, 0, 1, 0; break;
        case 'n': m << 1, 0, 0, 0; break; // sigma+ sigma-
        default: throw std::invalid_argument(std::string("pauli: unknown axis ") + axis);
    }
    return m;
}

SparseCd site_operator(int n_sites, int site, const Eigen::Matrix2cd& op) {
    if (site < 0 || site >= n_sites) throw std::invalid_argument("site_operator: bad site");
    SparseCd out = sparse_identity(1);
    const SparseCd op_s = sparse2(op);
    for (int k = 0; k < n_sites; ++k) {
        const SparseCd& factor = (k == site) ? op_s : sparse_identity(2);
        out = Eigen::kroneckerProduct(out, factor).eval();
    }
    return out;
}

SparseCd build_hamiltonian(const LatticeSpec& lat, const ModelParams& p) {
    p.validate();
    const int n = lat.num_sites();
    const Eigen::Index dim = Eigen::Index(1) << n;
    SparseCd h(dim, dim);
    for (int r = 0; r < n; ++r) {
        h += 0.5 * p.delta * site_operator(n, r, pauli('z'));
        h += p.omega * site_operator(n, r, pauli('x'));
    }
    for (const auto& [a, b] : lat.nn_pairs()) {
        if (p.kind == InteractionKind::XY) {
            const SparseCd hop = site_operator(n, a, pauli('+')) * site_operator(n, b, pauli('-'));
            h -= p.coupling * (hop + SparseCd(hop.adjoint()));
        } else {
            h -= 0.5 * p.coupling * site_operator(n, a, pauli('z')) *
                 site_operator(n, b, pauli('z'));
        }
    }
    h.makeCompressed();
    return h;
}

Liouvillian build_liouvillian(const LatticeSpec& lat, const ModelParams& p,
                              const LiouvillianOptions& opt) {
    p.validate();
    const int n = lat.num_sites();
    if (n > opt.max_sites) {
        throw std::length_error("build_liouvillian: " + std::to_string(n) +
                                " sites exceeds the configured maximum of " +
                                std::to_string(opt.max_sites));
    }
    const Eigen::Index dim = Eigen::Index(1) << n;
    const SparseCd h = build_hamiltonian(lat, p);
    const SparseCd id = sparse_identity(dim);

    // column stacking: vec(A rho B) = (B^T kron A) vec(rho)
    SparseCd l = -kI * (Eigen::kroneckerProduct(id, h) -
                        Eigen::kroneckerProduct(SparseCd(h.transpose()), id));
    for (int r = 0; r < n; ++r) {
        const SparseCd sm = site_operator(n, r, pauli('-'));
        const SparseCd num = site_operator(n, r, pauli('n'));
        l += p.gamma * Eigen::kroneckerProduct(SparseCd(site_operator(n, r, pauli('+')).transpose()), sm);
        l -= 0.5 * p.gamma * Eigen::kroneckerProduct(id, num);
        l -= 0.5 * p.gamma * Eigen::kroneckerProduct(SparseCd(num.transpose()), id);
    }
    l.makeCompressed();

    Liouvillian out;
    out.op = std::move(l);
    out.n_sites = n;
    out.lattice = lat;
    out.params = p;
    return out;
}

VectorXcd vec(const DensityMatrix& rho) {
    return Eigen::Map<const VectorXcd>(rho.data(), rho.size());
}

DensityMatrix unvec(const VectorXcd& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
    if (d * d != v.size()) throw std::invalid_argument("unvec: length is not a square");
    return Eigen::Map<const MatrixXcd>(v.data(), d, d);
}

DensityMatrixCheck check_density_matrix(const DensityMatrix& rho) {
    DensityMatrixCheck c;
    c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rho + rho.adjoint()));
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

DensityMatrix product_density_matrix(const std::vector<Bloch>& site_mus) {
    DensityMatrix rho = MatrixXcd::Identity(1, 1);
    for (const auto& mu : site_mus) {
        Eigen::Matrix2cd site = 0.5 * (Eigen::Matrix2cd::Identity() + mu[0] * pauli('x') +
                                       mu[1] * pauli('y') + mu[2] * pauli('z'));
        rho = Eigen::kroneckerProduct(rho, site).eval();
    }
    return rho;
}

Complex expectation(const DensityMatrix& rho, const SparseCd& op) {
    return (op * rho).trace();
}

Bloch site_bloch_vector(const DensityMatrix& rho, int n_sites, int site) {
    Bloch mu;
    mu[0] = expectation(rho, site_operator(n_sites, site, pauli('x'))).real();
    mu[1] = expectation(rho, site_operator(n_sites, site, pauli('y'))).real();
    mu[2] = expectation(rho, site_operator(n_sites, site, pauli('z'))).real();
    return mu;
}

// --- steady state -----------------------------------------------------------

namespace {

double liouv_residual(const Liouvillian& liouv, const VectorXcd& v) {
    return (liouv.op * v).lpNorm<Eigen::Infinity>();
}

Complex vec_trace(const VectorXcd& v, Eigen::Index hdim) {
    Complex tr(0, 0);
    for (Eigen::Index i = 0; i < hdim; ++i) tr += v[i * hdim + i];
    return tr;
}

VectorXcd maximally_mixed_vec(Eigen::Index hdim) {
    VectorXcd v = VectorXcd::Zero(hdim * hdim);
    for (Eigen::Index i = 0; i < hdim; ++i) v[i * hdim + i] = 1.0 / double(hdim);
    return v;
}

void finalize_steady(const Liouvillian& liouv, VectorXcd v, SteadyStateResult& out,
                     double tol) {
    const Complex tr = vec_trace(v, liouv.hilbert_dim());
    if (std::abs(tr) < 1e-300) {
        out.converged = false;
        out.message = "null vector has vanishing trace";
        return;
    }
    v /= tr;
    DensityMatrix rho = unvec(v);
    rho = 0.5 * (rho + rho.adjoint().eval()); // hermitize
    rho /= rho.trace().real();
    out.vec_rho = vec(rho);
    out.residual = liouv_residual(liouv, out.vec_rho);
    out.rho = std::move(rho);
    out.converged = out.residual < tol;
}

} // namespace

SteadyStateResult steady_state(const Liouvillian& liouv, const SteadyStateOptions& opt) {
    SteadyStateResult out;
    const Eigen::Index dim = liouv.dim();

    if (dim <= opt.lu_max_dim) {
        // inverse iteration on the slightly shifted generator
        SparseCd shifted = liouv.op;
        shifted -= opt.shift * sparse_identity(dim);
        Eigen::SparseLU<SparseCd> lu;
        lu.compute(shifted);
        if (lu.info() == Eigen::Success) {
            out.method = "shift-invert";
            VectorXcd v = opt.warm_start ? *opt.warm_start : maximally_mixed_vec(liouv.hilbert_dim());
            for (int it = 0; it < opt.max_iterations; ++it) {
                v = lu.solve(v);
                v /= v.norm();
                if (liouv_residual(liouv, v) < 0.1 * opt.tol) break;
            }
            finalize_steady(liouv, v, out, opt.tol);

            if (out.converged && opt.check_uniqueness) {
                // deflated inverse iteration probes for a second null direction
                const VectorXcd v0 = out.vec_rho / out.vec_rho.norm();
                std::mt19937_64 rng(12345);
                std::normal_distribution<double> gauss;
                VectorXcd w(dim);
                for (Eigen::Index i = 0; i < dim; ++i) w[i] = Complex(gauss(rng), gauss(rng));
                w -= v0 * v0.dot(w);
                w /= w.norm();
                for (int it = 0; it < 6; ++it) {
                    w = lu.solve(w);
                    w -= v0 * v0.dot(w);
                    w /= w.norm();
                }
                if (liouv_residual(liouv, w) < opt.degeneracy_tol) {
                    out.null_space_dim = 2;
                    out.message = "second null direction detected (degenerate steady state)";
                }
            }
            if (out.converged) return out;
        }
        out.message += (out.message.empty() ? "" : "; ") + std::string("shift-invert stagnated");
    }

    // long-time Krylov evolution of the maximally mixed (or warm-start) state;
    // the stride adapts to the observed residual decay rate
    out.method = out.method.empty() ? "evolution" : out.method + "+evolution";
    VectorXcd v = opt.warm_start ? *opt.warm_start : maximally_mixed_vec(liouv.hilbert_dim());
    double t = 0.0;
    double stride = 15.0;
    double prev_res = std::numeric_limits<double>::infinity();
    while (t < opt.evolve_t_max) {
        // a lean subspace wins here: orthogonalization cost grows with the
        // basis size while the admissible step grows only about linearly
        v = krylov_expmv(liouv.op, v, stride, 1e-9, 24);
        const Complex tr = vec_trace(v, liouv.hilbert_dim());
        if (std::abs(tr) > 1e-300) v /= tr;
        t += stride;
        const double res = liouv_residual(liouv, v);
        if (res < 0.5 * opt.tol) break;
        if (std::isfinite(prev_res) && res < prev_res) {
            const double rate = std::log(prev_res / res) / stride;
            const double t_needed = std::log(res / (0.3 * opt.tol)) / rate;
            stride = std::clamp(t_needed + 5.0, 10.0, 400.0);
        } else {
            stride = std::min(2.0 * stride, 400.0);
        }
        prev_res = res;
    }
    finalize_steady(liouv, v, out, opt.tol);
    if (!out.converged && out.message.empty())
        out.message = "evolution fallback did not reach the residual tolerance";
    out.null_space_dim = out.null_space_dim == 2 ? 2 : 1;
    return out;
}

// --- time evolution ---------------------------------------------------------

RhoTrajectory evolve_rho(const DensityMatrix& rho0, const Liouvillian& liouv, double t_final,
                         const std::vector<double>& record_times, const OdeOptions& opt) {
    if (t_final <= 0) throw std::invalid_argument("evolve_rho: t_final must be > 0");
    RhoTrajectory traj;
    auto record = [&](double t, const VectorXcd& v) {
        DensityMatrix rho = unvec(v);
        traj.max_trace_error =
            std::max(traj.max_trace_error, std::abs(rho.trace() - Complex(1, 0)));
        traj.max_hermiticity_error = std::max(
            traj.max_hermiticity_error, (rho - rho.adjoint().eval()).cwiseAbs().maxCoeff());
        traj.times.push_back(t);
        traj.states.push_back(std::move(rho));
    };

    record(0.0, vec(rho0));
    size_t next = 0;
    while (next < record_times.size() && record_times[next] <= 0.0) ++next;

    auto rhs = [&](double, const VectorXcd& y, VectorXcd& dy) { dy = liouv.op * y; };
    auto observer = [&](double t, const VectorXcd& y, const VectorXcd&) {
        while (next < record_times.size() && record_times[next] <= t) {
            // records land on accepted step times at or after the request
            record(t, y);
            ++next;
        }
        return true;
    };

    auto res = integrate_dopri5<VectorXcd>(rhs, vec(rho0), 0.0, t_final, opt, observer);
    traj.status = res.status;
    traj.message = res.message;
    if (traj.times.back() != res.t_final) record(res.t_final, res.state);
    return traj;
}

VectorXcd krylov_expmv(const SparseCd& a, VectorXcd v, double t, double tol, int m) {
    if (t == 0.0 || v.norm() == 0.0) return v;
    const Eigen::Index n = v.size();
    m = int(std::min<Eigen::Index>(m, n));
    double done = 0.0;
    double dt = t;

    while (done < t) {
        dt = std::min(dt, t - done);
        const double beta = v.norm();
        MatrixXcd vbasis(n, m + 1);
        MatrixXcd h = MatrixXcd::Zero(m + 2, m + 1);
        vbasis.col(0) = v / beta;
        int built = m;
        bool breakdown = false;
        for (int j = 0; j < m; ++j) {
            VectorXcd w = a * vbasis.col(j);
            for (int i = 0; i <= j; ++i) {
                h(i, j) = vbasis.col(i).dot(w);
                w -= h(i, j) * vbasis.col(i);
            }
            // one re-orthogonalization pass keeps the basis clean
            for (int i = 0; i <= j; ++i) {
                const Complex c = vbasis.col(i).dot(w);
                h(i, j) += c;
                w -= c * vbasis.col(i);
            }
            h(j + 1, j) = w.norm();
            if (std::abs(h(j + 1, j)) < 1e-14) {
                built = j + 1;
                breakdown = true;
                break;
            }
            if (j + 1 <= m) vbasis.col(j + 1) = w / h(j + 1, j);
        }

        while (true) {
            const MatrixXcd hexp = (dt * h.topLeftCorner(built, built)).exp();
            const double err = breakdown ? 0.0
                                         : std::abs(h(built, built - 1)) * dt *
                                               std::abs(hexp(built - 1, 0)) * beta;
            if (err <= tol * std::max(1.0, beta) || dt <= 1e-12) {
                v = beta * (vbasis.leftCols(built) * hexp.col(0));
                done += dt;
                if (err < 0.1 * tol * std::max(1.0, beta)) dt *= 1.8;
                break;
            }
            dt *= 0.5;
        }
        if (breakdown && done < t) {
            // invariant subspace: the remaining time is exact in one shot
            const MatrixXcd hexp = ((t - done) * h.topLeftCorner(built, built)).exp();
            v = v.norm() * (vbasis.leftCols(built) * hexp.col(0));
            done = t;
        }
    }
    return v;
}

// --- observables ------------------------------------------------------------

MagnetizationDistribution magnetization_distribution(const DensityMatrix& rho, int n_sites,
                                                     char axis) {
    if (axis != 'x' && axis != 'y' && axis != 'z')
        throw std::invalid_argument("magnetization_distribution: axis must be x, y or z");
    const Eigen::Index dim = Eigen::Index(1) << n_sites;
    if (rho.rows() != dim)
        throw std::invalid_argument("magnetization_distribution: dimension mismatch");

    // columns of c are the +axis / -axis single-site eigenstates
    Eigen::Matrix2cd c;
    const double s = 1.0 / std::sqrt(2.0);
    if (axis == 'x')
        c << s, s, s, -s;
    else if (axis == 'y')
        c << s, s, kI * s, -kI * s;
    else
        c.setIdentity();

    MatrixXcd basis = MatrixXcd::Identity(1, 1);
    for (int k = 0; k < n_sites; ++k) basis = Eigen::kroneckerProduct(basis, c).eval();

    const VectorXcd diag = (basis.adjoint() * rho * basis).diagonal();
    MagnetizationDistribution dist;
    dist.values.resize(n_sites + 1);
    dist.probabilities.assign(n_sites + 1, 0.0);
    for (int k = 0; k <= n_sites; ++k) dist.values[k] = double(n_sites - 2 * k) / n_sites;
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        const int k = std::popcount(static_cast<unsigned long long>(idx)); // # of -axis spins
        dist.probabilities[k] += diag[idx].real();
    }
    for (double& p : dist.probabilities) {
        if (p < 0.0 && p > -1e-12) p = 0.0; // clip round-off negatives
    }
    return dist;
}

double bimodality_index(const MagnetizationDistribution& dist) {
    const auto& p = dist.probabilities;
    const int n = static_cast<int>(p.size());
    if (n < 2) return 0.0;

    // merge exact plateaus, then find strict local maxima (boundaries compare
    // against their single neighbor)
    struct Peak {
        double value;
        int lo, hi; // plateau extent
    };
    std::vector<Peak> maxima;
    const double plateau_tol = 1e-12;
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && std::abs(p[j + 1] - p[i]) <= plateau_tol * std::max(1.0, p[i])) ++j;
        const bool left_ok = (i == 0) || (p[i - 1] < p[i]);
        const bool right_ok = (j == n - 1) || (p[j + 1] < p[i]);
        if (left_ok && right_ok) maxima.push_back({p[i], i, j});
        i = j + 1;
    }
    if (maxima.size() < 2) return 0.0;

    std::sort(maxima.begin(), maxima.end(),
              [](const Peak& a, const Peak& b) { return a.value > b.value; });
    const Peak& p1 = maxima[0];
    const Peak& p2 = maxima[1];
    const int lo = std::min(p1.hi, p2.hi);
    const int hi = std::max(p1.lo, p2.lo);
    double pmin = std::numeric_limits<double>::infinity();
    for (int k = lo + 1; k < hi; ++k) pmin = std::min(pmin, p[k]);
    if (!std::isfinite(pmin)) return 0.0; // adjacent peaks, nothing in between
    const double b = 2.0 * (p2.value - pmin) / (p1.value + p2.value);
    return std::clamp(b, 0.0, 1.0);
}

// --- spectrum ---------------------------------------------------------------

SpectrumResult liouvillian_spectrum_edge(const Liouvillian& liouv, int count,
                                         const SpectrumOptions& opt) {
    if (count < 2) throw std::invalid_argument("liouvillian_spectrum_edge: count must be >= 2");
    SpectrumResult out;
    const Eigen::Index dim = liouv.dim();

    if (dim <= opt.dense_max_dim) {
        Eigen::ComplexEigenSolver<MatrixXcd> es(MatrixXcd(liouv.op));
        std::vector<Complex> evs(es.eigenvalues().data(),
                                 es.eigenvalues().data() + es.eigenvalues().size());
        std::sort(evs.begin(), evs.end(), [](Complex a, Complex b) {
            if (a.real() != b.real()) return a.real() > b.real();
            return a.imag() > b.imag();
        });
        evs.resize(std::min<size_t>(evs.size(), count));
        out.eigenvalues = std::move(evs);
        out.residuals.assign(out.eigenvalues.size(), 0.0);
        return out;
    }

    // shift-invert Arnoldi around a small positive shift: the eigenvalues of
    // largest real part cluster near zero for this generator
    SparseCd shifted = liouv.op;
    shifted -= Complex(opt.shift, 0.0) * sparse_identity(dim);
    Eigen::SparseLU<SparseCd> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) {
        out.converged = false;
        out.message = "sparse factorization failed";
        return out;
    }

    const int m = std::min<Eigen::Index>(std::max(opt.subspace_dim, 3 * count), dim);
    std::mt19937_64 rng(777);
    std::normal_distribution<double> gauss;
    VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(gauss(rng), gauss(rng));
    v /= v.norm();

    MatrixXcd vbasis(dim, m + 1);
    MatrixXcd h = MatrixXcd::Zero(m + 1, m);
    vbasis.col(0) = v;
    int built = m;
    for (int j = 0; j < m; ++j) {
        VectorXcd w = lu.solve(vbasis.col(j));
        for (int i = 0; i <= j; ++i) {
            h(i, j) = vbasis.col(i).dot(w);
            w -= h(i, j) * vbasis.col(i);
        }
        for (int i = 0; i <= j; ++i) {
            const Complex c = vbasis.col(i).dot(w);
            h(i, j) += c;
            w -= c * vbasis.col(i);
        }
        h(j + 1, j) = w.norm();
        if (std::abs(h(j + 1, j)) < 1e-13) {
            built = j + 1;
            break;
        }
        vbasis.col(j + 1) = w / h(j + 1, j);
    }

    Eigen::ComplexEigenSolver<MatrixXcd> es(h.topLeftCorner(built, built));
    struct Ritz {
        Complex lambda;
        double residual;
    };
    std::vector<Ritz> ritz;
    for (int i = 0; i < built; ++i) {
        const Complex theta = es.eigenvalues()[i];
        if (std::abs(theta) < 1e-14) continue;
        const Complex lambda = Complex(opt.shift, 0.0) + 1.0 / theta;
        const VectorXcd y = vbasis.leftCols(built) * es.eigenvectors().col(i);
        const double res = (liouv.op * y - lambda * y).norm() / y.norm();
        ritz.push_back({lambda, res});
    }
    std::sort(ritz.begin(), ritz.end(), [](const Ritz& a, const Ritz& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return a.lambda.imag() > b.lambda.imag();
    });
    for (const auto& r : ritz) {
        if (static_cast<int>(out.eigenvalues.size()) >= count) break;
        out.eigenvalues.push_back(r.lambda);
        out.residuals.push_back(r.residual);
        if (r.residual > opt.residual_tol) out.converged = false;
    }
    if (static_cast<int>(out.eigenvalues.size()) < count) out.converged = false;
    if (!out.converged)
        out.message = "Arnoldi residuals above tolerance; consider a larger subspace";
    return out;
}

} // namespace ddspin
