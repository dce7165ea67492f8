#pragma once

// Second, independent transcription of the MFQF kinetic terms and an
// oracle-assembled full derivative, used by the unit tests and the acceptance
// property suite. Written directly from the published expressions with
// explicit displacement arithmetic; shares no code with the library kernels.

#include <Eigen/Dense>
#include <algorithm>

#include "ddspin/meanfield.hpp"
#include "ddspin/mfqf.hpp"

namespace mfqf_oracle {

using namespace ddspin;

struct OracleIn {
    const CorrelatorField& eta;
    const Bloch& mu;
    double coupling;
};

double theta_at(const OracleIn& in, const Displacement& d, int a, int b) {
    return in.eta.at(d, a, b) + in.mu[a] * in.mu[b];
}

Displacement unit_x(const LatticeSpec& lat) {
    if (lat.geometry() == Geometry::FullyConnected) return {1};
    Displacement u(lat.sizes().size(), 0);
    u[0] = 1;
    return u;
}

// neighbor sums sum_{R' != 0, |R'-R|=1} theta_ab(R')
Eigen::Matrix3d oracle_neighbor_sums(const OracleIn& in, const Displacement& r) {
    const auto& lat = in.eta.table().lattice();
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    if (lat.geometry() == Geometry::FullyConnected) {
        const double mult = lat.num_sites() - 2;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s(a, b) = mult * theta_at(in, {1}, a, b);
        return s;
    }
    for (const auto& nb : neighbors(lat, r)) {
        if (std::all_of(nb.begin(), nb.end(), [](int x) { return x == 0; })) continue;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s(a, b) += theta_at(in, nb, a, b);
    }
    return s;
}

Eigen::Matrix3d oracle_f_xy(const OracleIn& in, const Displacement& r) {
    const auto& lat = in.eta.table().lattice();
    const double J = in.coupling;
    const double mx = in.mu[0], my = in.mu[1], mz = in.mu[2];
    const Displacement u1 = unit_x(lat);
    const double dnn = is_nearest_neighbor(lat, r) ? 1.0 : 0.0;
    const double zmd = lat.connectivity() - dnn;
    const Eigen::Matrix3d s = oracle_neighbor_sums(in, r);
    auto t1 = [&](int a, int b) { return theta_at(in, u1, a, b); };
    auto tr = [&](int a, int b) { return theta_at(in, r, a, b); };

    Eigen::Matrix3d f;
    f(0, 0) = 2 * J * (2 * mx * my * mz - mx * t1(1, 2) - my * tr(0, 2)) * zmd -
              2 * J * mz * s(0, 1);
    f(1, 1) = -2 * J * (2 * mx * my * mz - my * t1(0, 2) - mx * tr(1, 2)) * zmd +
              2 * J * mz * s(0, 1);
    f(2, 2) = -2 * J * (mx * tr(1, 2) - my * tr(0, 2)) * zmd -
              2 * J * (my * s(0, 2) - mx * s(1, 2));
    f(0, 1) = J *
                  (2 * my * my * mz - 2 * mx * mx * mz - my * t1(1, 2) - my * tr(1, 2) +
                   mx * t1(0, 2) + mx * tr(0, 2)) *
                  zmd -
              J * (mz * s(1, 1) - mz * s(0, 0));
    f(0, 2) = -J * my * dnn +
              J *
                  (2 * mz * mz * my - mz * t1(1, 2) - my * tr(2, 2) - mx * tr(0, 1) +
                   my * tr(0, 0)) *
                  zmd -
              J * (mz * s(1, 2) + my * s(0, 0) - mx * s(0, 1));
    f(1, 2) = J * mx * dnn +
              J *
                  (-2 * mz * mz * mx + mz * t1(0, 2) + mx * tr(2, 2) - mx * tr(1, 1) +
                   my * tr(0, 1)) *
                  zmd +
              J * (mz * s(0, 2) - my * s(0, 1) + mx * s(1, 1));
    f(1, 0) = f(0, 1);
    f(2, 0) = f(0, 2);
    f(2, 1) = f(1, 2);
    return f;
}

Eigen::Matrix3d oracle_f_ising(const OracleIn& in, const Displacement& r) {
    const auto& lat = in.eta.table().lattice();
    const double Jz = in.coupling;
    const double mx = in.mu[0], my = in.mu[1], mz = in.mu[2];
    const Displacement u1 = unit_x(lat);
    const double dnn = is_nearest_neighbor(lat, r) ? 1.0 : 0.0;
    const double zmd = lat.connectivity() - dnn;
    const Eigen::Matrix3d s = oracle_neighbor_sums(in, r);
    auto t1 = [&](int a, int b) { return theta_at(in, u1, a, b); };
    auto tr = [&](int a, int b) { return theta_at(in, r, a, b); };

    Eigen::Matrix3d f;
    f(0, 0) = -2 * Jz * (2 * mx * my * mz - mx * t1(1, 2) - mz * tr(0, 1)) * zmd +
              2 * Jz * my * s(0, 2);
    f(1, 1) = 2 * Jz * (2 * mx * my * mz - my * t1(0, 2) - mz * tr(0, 1)) * zmd -
              2 * Jz * mx * s(1, 2);
    f(2, 2) = 0.0;
    f(0, 1) = Jz *
                  (2 * mx * mx * mz - 2 * my * my * mz - mx * t1(0, 2) - mz * tr(0, 0) +
                   my * t1(1, 2) + mz * tr(1, 1)) *
                  zmd +
              Jz * (my * s(1, 2) - mx * s(0, 2));
    f(0, 2) = Jz * my * dnn - Jz * (2 * mz * mz * my - mz * t1(1, 2) - mz * tr(1, 2)) * zmd +
              Jz * my * s(2, 2);
    f(1, 2) = -Jz * mx * dnn + Jz * (2 * mz * mz * mx - mz * t1(0, 2) - mz * tr(0, 2)) * zmd -
              Jz * mx * s(2, 2);
    f(1, 0) = f(0, 1);
    f(2, 0) = f(0, 2);
    f(2, 1) = f(1, 2);
    return f;
}

// oracle-assembled full time derivative of (mu, eta)
void oracle_rhs(const MfqfState& s, const ModelParams& p, Bloch& dmu, CorrelatorField& deta) {
    const auto& tab = s.eta.table();
    const auto& lat = tab.lattice();
    const Displacement u1 = unit_x(lat);
    const Bloch mu = s.mu;
    dmu = mf_rhs_with_feedback(mu, p, lat.connectivity(), s.eta.at(u1, 0, 2),
                               s.eta.at(u1, 1, 2));

    const Eigen::Matrix3d pi = pi_matrix(p);
    const OracleIn in{s.eta, mu, p.coupling};
    for (int i = 0; i < tab.n_disp(); ++i) {
        const Displacement r = tab.coords()[i];
        Eigen::Matrix3d theta;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) theta(a, b) = theta_at(in, r, a, b);
        const Eigen::Matrix3d f = (p.kind == InteractionKind::XY) ? oracle_f_xy(in, r)
                                                                  : oracle_f_ising(in, r);
        const Eigen::Matrix3d dtheta =
            pi * theta + theta * pi.transpose() + f + g_terms(mu, theta, p.gamma);
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) {
                const double dmm = mu[a] * dmu[b] + mu[b] * dmu[a];
                deta.at(i, pair_index(a, b)) = dtheta(a, b) - dmm;
            }
        }
    }
}


} // namespace mfqf_oracle
