#include "ddspin/fc_reduced.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace ddspin {

namespace {

const Complex kI(0.0, 1.0);

// matrix units in the order {u, v, w, d} = {(0,0), (0,1), (1,0), (1,1)}
Eigen::Matrix2cd unit_op(int e) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(e / 2, e % 2) = 1.0;
    return m;
}

// left- and right-multiplication superoperators on the matrix-unit basis
Eigen::Matrix4cd left_mult(const Eigen::Matrix2cd& op) {
    Eigen::Matrix4cd s;
    for (int j = 0; j < 4; ++j) {
        const Eigen::Matrix2cd r = op * unit_op(j);
        for (int i = 0; i < 4; ++i) s(i, j) = r(i / 2, i % 2);
    }
    return s;
}

Eigen::Matrix4cd right_mult(const Eigen::Matrix2cd& op) {
    Eigen::Matrix4cd s;
    for (int j = 0; j < 4; ++j) {
        const Eigen::Matrix2cd r = unit_op(j) * op;
        for (int i = 0; i < 4; ++i) s(i, j) = r(i / 2, i % 2);
    }
    return s;
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

double multinomial(int n, const std::array<int, 4>& parts) {
    double f = factorial(n);
    for (int p : parts) f /= factorial(p);
    return f;
}

double binomial(int n, int k) {
    return factorial(n) / (factorial(k) * factorial(n - k));
}

} // namespace

FcReducedSolver::FcReducedSolver(int n_sites, const ModelParams& p) : n_(n_sites), params_(p) {
    p.validate();
    if (n_sites < 2) throw std::invalid_argument("FcReducedSolver: need at least 2 sites");
    if (n_sites > 40) throw std::invalid_argument("FcReducedSolver: basis too large");

    // enumerate multisets (n_u, n_v, n_w, n_d) summing to N
    const int span = n_ + 1;
    lookup_.assign(span * span * span, -1);
    for (int nu = 0; nu <= n_; ++nu)
        for (int nv = 0; nv + nu <= n_; ++nv)
            for (int nw = 0; nw + nv + nu <= n_; ++nw) {
                const int nd = n_ - nu - nv - nw;
                lookup_[(nu * span + nv) * span + nw] = static_cast<int>(basis_.size());
                basis_.push_back({nu, nv, nw, nd});
            }
    dim_ = static_cast<int>(basis_.size());

    // single-site pieces
    const Eigen::Matrix2cd h = 0.5 * p.delta * pauli('z') + p.omega * pauli('x');
    const Mat4 lh = left_mult(h), rh = right_mult(h);
    const Mat4 lm = left_mult(pauli('-')), rp = right_mult(pauli('+'));
    const Mat4 ln = left_mult(pauli('n')), rn = right_mult(pauli('n'));
    Mat4 local = -kI * (lh - rh) + p.gamma * (lm * rp - 0.5 * ln - 0.5 * rn);
    liouv_ = lift(local);

    // pair couplings over all ordered site pairs R != R':
    //   sum_{R != R'} A_R B_{R'} = E(A) E(B) - E(A B)
    if (p.kind == InteractionKind::XY) {
        const Mat4 lp = left_mult(pauli('+')), lmi = left_mult(pauli('-'));
        const Mat4 rpp = right_mult(pauli('+')), rmm = right_mult(pauli('-'));
        const MatrixXcd elp = lift(lp), elm = lift(lmi), erp = lift(rpp), erm = lift(rmm);
        liouv_ += kI * p.coupling * (elp * elm - lift(lp * lmi));
        liouv_ -= kI * p.coupling * (erp * erm - lift(rpp * rmm));
    } else {
        const Mat4 lz = left_mult(pauli('z')), rz = right_mult(pauli('z'));
        const MatrixXcd elz = lift(lz), erz = lift(rz);
        liouv_ += kI * 0.25 * p.coupling * (elz * elz - lift(lz * lz));
        liouv_ -= kI * 0.25 * p.coupling * (erz * erz - lift(rz * rz));
    }
}

int FcReducedSolver::index_of(const std::array<int, 4>& n) const {
    const int span = n_ + 1;
    return lookup_[(n[0] * span + n[1]) * span + n[2]];
}

MatrixXcd FcReducedSolver::lift(const Mat4& s) const {
    // sum_R s_R maps the symmetrized product with multiset n to
    //   (sum_e n_e s_ee) itself  +  s_{e' e} (n_{e'} + 1) times the multiset
    //   with one e replaced by e' (counting assignments of the target).
    MatrixXcd m = MatrixXcd::Zero(dim_, dim_);
    for (int col = 0; col < dim_; ++col) {
        const auto& n = basis_[col];
        Complex diag(0, 0);
        for (int e = 0; e < 4; ++e) diag += double(n[e]) * s(e, e);
        m(col, col) += diag;
        for (int e = 0; e < 4; ++e) {
            if (n[e] == 0) continue;
            for (int ep = 0; ep < 4; ++ep) {
                if (ep == e || s(ep, e) == Complex(0, 0)) continue;
                auto n2 = n;
                --n2[e];
                ++n2[ep];
                m(index_of(n2), col) += s(ep, e) * double(n2[ep]);
            }
        }
    }
    return m;
}

Complex FcReducedSolver::trace_of(const VectorXcd& coeffs) const {
    Complex tr(0, 0);
    for (int i = 0; i < dim_; ++i) {
        const auto& n = basis_[i];
        if (n[1] != 0 || n[2] != 0) continue; // off-diagonal units are traceless
        tr += coeffs[i] * binomial(n_, n[0]);
    }
    return tr;
}

FcReducedSolver::SteadyState FcReducedSolver::steady_state(double tol,
                                                           double degeneracy_tol) const {
    Eigen::BDCSVD<MatrixXcd> svd(liouv_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SteadyState out;
    out.coeffs = svd.matrixV().col(dim_ - 1);
    out.singular_gap = svd.singularValues()[dim_ - 2];
    out.degenerate = out.singular_gap < degeneracy_tol;

    const Complex tr = trace_of(out.coeffs);
    if (std::abs(tr) < 1e-300) {
        out.converged = false;
        return out;
    }
    out.coeffs /= tr;

    // hermitize: conjugation swaps the v and w counts
    VectorXcd herm(dim_);
    for (int i = 0; i < dim_; ++i) {
        const auto& n = basis_[i];
        herm[index_of({n[0], n[2], n[1], n[3]})] = std::conj(out.coeffs[i]);
    }
    out.coeffs = 0.5 * (out.coeffs + herm);

    out.residual = (liouv_ * out.coeffs).lpNorm<Eigen::Infinity>();
    out.converged = out.residual < tol;
    return out;
}

Bloch FcReducedSolver::bloch_vector(const VectorXcd& coeffs) const {
    Bloch mu;
    const char axes[3] = {'x', 'y', 'z'};
    for (int a = 0; a < 3; ++a) {
        const MatrixXcd m = lift(left_mult(pauli(axes[a])));
        mu[a] = (trace_of(m * coeffs) / double(n_)).real();
    }
    return mu;
}

MagnetizationDistribution FcReducedSolver::distribution(const VectorXcd& coeffs,
                                                        char axis) const {
    // single-site eigenstates |+>, |-> of the chosen axis
    Eigen::Vector2cd plus, minus;
    const double s = 1.0 / std::sqrt(2.0);
    switch (axis) {
        case 'x': plus << s, s; minus << s, -s; break;
        case 'y': plus << s, kI * s; minus << s, -kI * s; break;
        case 'z': plus << 1, 0; minus << 0, 1; break;
        default: throw std::invalid_argument("distribution: axis must be x, y or z");
    }
    // diagonal matrix elements of the four units in each eigenstate
    std::array<Complex, 4> mp, mm;
    for (int e = 0; e < 4; ++e) {
        mp[e] = (plus.adjoint() * unit_op(e) * plus)(0);
        mm[e] = (minus.adjoint() * unit_op(e) * minus)(0);
    }

    MagnetizationDistribution dist;
    dist.values.resize(n_ + 1);
    dist.probabilities.assign(n_ + 1, 0.0);
    for (int k = 0; k <= n_; ++k) dist.values[k] = double(n_ - 2 * k) / n_;

    // <s_k| P_n |s_k> summed over placements of each unit on the N-k plus
    // sites and k minus sites; p_k gains the (N choose k) degeneracy of s_k.
    for (int k = 0; k <= n_; ++k) {
        const int npl = n_ - k;
        Complex pk(0, 0);
        for (int i = 0; i < dim_; ++i) {
            if (coeffs[i] == Complex(0, 0)) continue;
            const auto& n = basis_[i];
            Complex acc(0, 0);
            for (int ju = 0; ju <= n[0]; ++ju)
                for (int jv = 0; jv <= n[1]; ++jv)
                    for (int jw = 0; jw <= n[2]; ++jw) {
                        const int jd = npl - ju - jv - jw;
                        if (jd < 0 || jd > n[3]) continue;
                        const std::array<int, 4> j = {ju, jv, jw, jd};
                        std::array<int, 4> rest;
                        for (int e = 0; e < 4; ++e) rest[e] = n[e] - j[e];
                        Complex val = multinomial(npl, j) * multinomial(k, rest);
                        for (int e = 0; e < 4; ++e) {
                            for (int q = 0; q < j[e]; ++q) val *= mp[e];
                            for (int q = 0; q < rest[e]; ++q) val *= mm[e];
                        }
                        acc += val;
                    }
            pk += coeffs[i] * acc;
        }
        double p = (binomial(n_, k) * pk).real();
        if (p < 0.0 && p > -1e-12) p = 0.0;
        dist.probabilities[k] = p;
    }
    return dist;
}

std::vector<Complex> FcReducedSolver::spectrum_edge(int count) const {
    Eigen::ComplexEigenSolver<MatrixXcd> es(liouv_);
    std::vector<Complex> evs(es.eigenvalues().data(), es.eigenvalues().data() + dim_);
    std::sort(evs.begin(), evs.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    evs.resize(std::min<size_t>(evs.size(), count));
    return evs;
}

} // namespace ddspin
