#include "ddspin/mfqf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ddspin/csv.hpp"

namespace ddspin {

Eigen::Matrix3d pi_matrix(const ModelParams& p) {
    Eigen::Matrix3d pi;
    pi << 0.0, -p.delta, 0.0,
          p.delta, 0.0, -2.0 * p.omega,
          0.0, 2.0 * p.omega, 0.0;
    return pi;
}

Eigen::Matrix3d g_terms(const Bloch& mu, const Eigen::Matrix3d& theta, double gamma) {
    // Dissipative sector of the two-point equations, obtained from the adjoint
    // action of the local loss channels on sigma_R^a sigma_0^b:
    //   D+[s^x] = -G/2 s^x,  D+[s^z] = -G (1 + s^z)
    // which fixes the coefficients below. A product state (theta = mu mu)
    // stays exactly uncorrelated under these terms.
    Eigen::Matrix3d g;
    const double gxx = -gamma * theta(0, 0);
    const double gyy = -gamma * theta(1, 1);
    const double gzz = -2.0 * gamma * (theta(2, 2) + mu[2]);
    const double gxy = -gamma * theta(0, 1);
    const double gxz = -gamma * (1.5 * theta(0, 2) + mu[0]);
    const double gyz = -gamma * (1.5 * theta(1, 2) + mu[1]);
    g << gxx, gxy, gxz,
         gxy, gyy, gyz,
         gxz, gyz, gzz;
    return g;
}

namespace {

// f-term kernels shared by the public per-displacement functions and the
// fused rhs loop. Inputs: bare moments at the NN reference displacement (t1),
// at this displacement (tr), and the neighbor sums s[ab] over displacements
// adjacent to r (origin excluded); zmd = Z - delta_{|r|,1}; dnn = delta_{|r|,1}.
using Six = std::array<double, kNumPairs>;

inline void f_kernel_xy(double j, const double* mu, const Six& t1, const double* tr,
                        const Six& s, double zmd, double dnn, double* f) {
    const double mx = mu[0], my = mu[1], mz = mu[2];
    f[PXX] = 2.0 * j * (2.0 * mx * my * mz - mx * t1[PYZ] - my * tr[PXZ]) * zmd -
             2.0 * j * mz * s[PXY];
    f[PYY] = -2.0 * j * (2.0 * mx * my * mz - my * t1[PXZ] - mx * tr[PYZ]) * zmd +
             2.0 * j * mz * s[PXY];
    f[PZZ] = -2.0 * j * (mx * tr[PYZ] - my * tr[PXZ]) * zmd -
             2.0 * j * (my * s[PXZ] - mx * s[PYZ]);
    f[PXY] = j *
                 (2.0 * my * my * mz - 2.0 * mx * mx * mz - my * t1[PYZ] - my * tr[PYZ] +
                  mx * t1[PXZ] + mx * tr[PXZ]) *
                 zmd -
             j * (mz * s[PYY] - mz * s[PXX]);
    f[PXZ] = -j * my * dnn +
             j *
                 (2.0 * mz * mz * my - mz * t1[PYZ] - my * tr[PZZ] - mx * tr[PXY] +
                  my * tr[PXX]) *
                 zmd -
             j * (mz * s[PYZ] + my * s[PXX] - mx * s[PXY]);
    f[PYZ] = j * mx * dnn +
             j *
                 (-2.0 * mz * mz * mx + mz * t1[PXZ] + mx * tr[PZZ] - mx * tr[PYY] +
                  my * tr[PXY]) *
                 zmd +
             j * (mz * s[PXZ] - my * s[PXY] + mx * s[PYY]);
}

inline void f_kernel_ising(double jz, const double* mu, const Six& t1, const double* tr,
                           const Six& s, double zmd, double dnn, double* f) {
    const double mx = mu[0], my = mu[1], mz = mu[2];
    f[PXX] = -2.0 * jz * (2.0 * mx * my * mz - mx * t1[PYZ] - mz * tr[PXY]) * zmd +
             2.0 * jz * my * s[PXZ];
    f[PYY] = 2.0 * jz * (2.0 * mx * my * mz - my * t1[PXZ] - mz * tr[PXY]) * zmd -
             2.0 * jz * mx * s[PYZ];
    f[PZZ] = 0.0;
    f[PXY] = jz *
                 (2.0 * mx * mx * mz - 2.0 * my * my * mz - mx * t1[PXZ] - mz * tr[PXX] +
                  my * t1[PYZ] + mz * tr[PYY]) *
                 zmd +
             jz * (my * s[PYZ] - mx * s[PXZ]);
    f[PXZ] = jz * my * dnn -
             jz * (2.0 * mz * mz * my - mz * t1[PYZ] - mz * tr[PYZ]) * zmd + jz * my * s[PZZ];
    f[PYZ] = -jz * mx * dnn +
             jz * (2.0 * mz * mz * mx - mz * t1[PXZ] - mz * tr[PXZ]) * zmd - jz * mx * s[PZZ];
}

Six theta_from_eta(const CorrelatorField& eta, int idx, const Bloch& mu) {
    Six t;
    const double mm[kNumPairs] = {mu[0] * mu[0], mu[1] * mu[1], mu[2] * mu[2],
                                  mu[0] * mu[1], mu[0] * mu[2], mu[1] * mu[2]};
    for (int c = 0; c < kNumPairs; ++c) t[c] = eta.at(idx, c) + mm[c];
    return t;
}

// neighbor sums of bare moments around displacement idx, origin excluded
Six neighbor_sums(const CorrelatorField& eta, int idx, const Bloch& mu) {
    const DisplacementTable& tab = eta.table();
    Six s{};
    if (tab.fc_mode()) {
        const Six t = theta_from_eta(eta, 0, mu);
        for (int c = 0; c < kNumPairs; ++c) s[c] = tab.fc_sum_multiplicity() * t[c];
        return s;
    }
    for (int slot = 0; slot < tab.n_slots(); ++slot) {
        const int nb = tab.neighbor(idx, slot);
        if (nb < 0) continue;
        const Six t = theta_from_eta(eta, nb, mu);
        for (int c = 0; c < kNumPairs; ++c) s[c] += t[c];
    }
    return s;
}

Eigen::Matrix3d six_to_matrix(const double* f) {
    Eigen::Matrix3d m;
    m << f[PXX], f[PXY], f[PXZ],
         f[PXY], f[PYY], f[PYZ],
         f[PXZ], f[PYZ], f[PZZ];
    return m;
}

} // namespace

Eigen::Matrix3d f_terms_xy(const Displacement& r, const Bloch& mu, const CorrelatorField& eta,
                           double coupling_j) {
    const DisplacementTable& tab = eta.table();
    const int idx = tab.index_of(r);
    if (idx < 0) throw std::invalid_argument("f_terms_xy: zero displacement");
    const Six t1 = theta_from_eta(eta, tab.nn_unit(), mu);
    const Six tr = theta_from_eta(eta, idx, mu);
    const Six s = neighbor_sums(eta, idx, mu);
    double f[kNumPairs];
    f_kernel_xy(coupling_j, mu.data(), t1, tr.data(), s, tab.z_minus_delta(idx),
                tab.nn(idx) ? 1.0 : 0.0, f);
    return six_to_matrix(f);
}

Eigen::Matrix3d f_terms_ising(const Displacement& r, const Bloch& mu, const CorrelatorField& eta,
                              double coupling_jz) {
    const DisplacementTable& tab = eta.table();
    const int idx = tab.index_of(r);
    if (idx < 0) throw std::invalid_argument("f_terms_ising: zero displacement");
    const Six t1 = theta_from_eta(eta, tab.nn_unit(), mu);
    const Six tr = theta_from_eta(eta, idx, mu);
    const Six s = neighbor_sums(eta, idx, mu);
    double f[kNumPairs];
    f_kernel_ising(coupling_jz, mu.data(), t1, tr.data(), s, tab.z_minus_delta(idx),
                   tab.nn(idx) ? 1.0 : 0.0, f);
    return six_to_matrix(f);
}

MfqfState mfqf_cold_start(const LatticeSpec& lat) {
    MfqfState s(DisplacementTable::build(lat));
    s.mu = Bloch(0, 0, -1);
    return s;
}

MfqfSystem::MfqfSystem(std::shared_ptr<const DisplacementTable> table, const ModelParams& p)
    : table_(std::move(table)), params_(p) {
    p.validate();
    theta_.resize(size_t(table_->n_disp()) * kNumPairs);
}

void MfqfSystem::pack(const MfqfState& s, Eigen::VectorXd& y) const {
    y.resize(state_size());
    y[0] = s.mu[0];
    y[1] = s.mu[1];
    y[2] = s.mu[2];
    std::copy(s.eta.data().begin(), s.eta.data().end(), y.data() + 3);
}

void MfqfSystem::unpack(const Eigen::VectorXd& y, double t, MfqfState& s) const {
    s.mu = Bloch(y[0], y[1], y[2]);
    std::copy(y.data() + 3, y.data() + y.size(), s.eta.data().begin());
    s.time = t;
}

void MfqfSystem::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const int n = table_->n_disp();
    const int ns = table_->n_slots();
    const bool fc = table_->fc_mode();
    const bool ising = params_.kind == InteractionKind::Ising;
    const double j = params_.coupling;
    const double gamma = params_.gamma;
    const double delta = params_.delta;
    const double omega = params_.omega;

    const double mx = y[0], my = y[1], mz = y[2];
    const double mu[3] = {mx, my, mz};
    const double mm[kNumPairs] = {mx * mx, my * my, mz * mz, mx * my, mx * mz, my * mz};

    // bare moments theta = eta + mu mu for every displacement
    const double* eta = y.data() + 3;
    double tmax = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < kNumPairs; ++c) {
            const double t = eta[i * kNumPairs + c] + mm[c];
            theta_[i * kNumPairs + c] = t;
            tmax = std::max(tmax, std::abs(t));
        }
    }
    last_theta_max_ = tmax;

    // magnetization sector with NN correlator feedback
    const int nn1 = table_->nn_unit();
    const double eta_xz1 = eta[nn1 * kNumPairs + PXZ];
    const double eta_yz1 = eta[nn1 * kNumPairs + PYZ];
    const Bloch dmu = mf_rhs_with_feedback(Bloch(mx, my, mz), params_, table_->z(), eta_xz1,
                                           eta_yz1);
    dy.resize(y.size());
    dy[0] = dmu[0];
    dy[1] = dmu[1];
    dy[2] = dmu[2];

    Six t1;
    for (int c = 0; c < kNumPairs; ++c) t1[c] = theta_[size_t(nn1) * kNumPairs + c];

    Six fc_sums{};
    if (fc) {
        for (int c = 0; c < kNumPairs; ++c)
            fc_sums[c] = table_->fc_sum_multiplicity() * theta_[c];
    }

    for (int i = 0; i < n; ++i) {
        const double* tr = &theta_[size_t(i) * kNumPairs];

        Six s{};
        if (fc) {
            s = fc_sums;
        } else {
            for (int slot = 0; slot < ns; ++slot) {
                const int nb = table_->neighbor(i, slot);
                if (nb < 0) continue;
                const double* tn = &theta_[size_t(nb) * kNumPairs];
                for (int c = 0; c < kNumPairs; ++c) s[c] += tn[c];
            }
        }

        double f[kNumPairs];
        const double zmd = table_->z_minus_delta(i);
        const double dnn = table_->nn(i) ? 1.0 : 0.0;
        if (ising)
            f_kernel_ising(j, mu, t1, tr, s, zmd, dnn, f);
        else
            f_kernel_xy(j, mu, t1, tr, s, zmd, dnn, f);

        // local Hamiltonian rotation: Pi theta + theta Pi^T
        double hterm[kNumPairs];
        hterm[PXX] = -2.0 * delta * tr[PXY];
        hterm[PYY] = 2.0 * delta * tr[PXY] - 4.0 * omega * tr[PYZ];
        hterm[PZZ] = 4.0 * omega * tr[PYZ];
        hterm[PXY] = delta * (tr[PXX] - tr[PYY]) - 2.0 * omega * tr[PXZ];
        hterm[PXZ] = -delta * tr[PYZ] + 2.0 * omega * tr[PXY];
        hterm[PYZ] = delta * tr[PXZ] + 2.0 * omega * (tr[PYY] - tr[PZZ]);

        // dissipative part (see g_terms)
        double g[kNumPairs];
        g[PXX] = -gamma * tr[PXX];
        g[PYY] = -gamma * tr[PYY];
        g[PZZ] = -2.0 * gamma * (tr[PZZ] + mz);
        g[PXY] = -gamma * tr[PXY];
        g[PXZ] = -gamma * (1.5 * tr[PXZ] + mx);
        g[PYZ] = -gamma * (1.5 * tr[PYZ] + my);

        // d eta = d theta - d(mu_a mu_b)
        double* de = dy.data() + 3 + size_t(i) * kNumPairs;
        const double dmm[kNumPairs] = {
            2.0 * mx * dmu[0],           2.0 * my * dmu[1],           2.0 * mz * dmu[2],
            mx * dmu[1] + my * dmu[0],   mx * dmu[2] + mz * dmu[0],   my * dmu[2] + mz * dmu[1]};
        for (int c = 0; c < kNumPairs; ++c) de[c] = hterm[c] + f[c] + g[c] - dmm[c];
    }
}

double MfqfSystem::isotropy_spread(const Eigen::VectorXd& y) const {
    if (table_->fc_mode()) return 0.0;
    double lo_xz = std::numeric_limits<double>::infinity(), hi_xz = -lo_xz;
    double lo_yz = lo_xz, hi_yz = -lo_xz;
    for (int i = 0; i < table_->n_disp(); ++i) {
        if (!table_->nn(i)) continue;
        const double exz = y[3 + i * kNumPairs + PXZ];
        const double eyz = y[3 + i * kNumPairs + PYZ];
        lo_xz = std::min(lo_xz, exz);
        hi_xz = std::max(hi_xz, exz);
        lo_yz = std::min(lo_yz, eyz);
        hi_yz = std::max(hi_yz, eyz);
    }
    return std::max(hi_xz - lo_xz, hi_yz - lo_yz);
}

MfqfRunResult mfqf_integrate(const MfqfState& s0, const ModelParams& p, double t_final,
                             const MfqfOptions& opt, const std::vector<double>& record_times) {
    if (t_final <= 0) throw std::invalid_argument("mfqf_integrate: t_final must be > 0");
    auto table = s0.eta.table_ptr();
    MfqfSystem sys(table, p);
    MfqfRunResult run(table);

    Eigen::VectorXd y0;
    sys.pack(s0, y0);

    const double series_dt = opt.series_dt > 0 ? opt.series_dt : t_final / 512.0;
    double next_sample = 0.0;
    size_t next_record = 0;
    std::vector<double> sorted_records = record_times;
    std::sort(sorted_records.begin(), sorted_records.end());

    const double theta_bound = 1.0 + opt.theta_bound_tol;
    std::string abort_reason;

    auto rhs = [&sys](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { sys.rhs(y, dy); };
    auto observer = [&](double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
        if (sys.last_theta_max() > theta_bound) {
            abort_reason = "theta bound exceeded: max |theta| = " +
                           std::to_string(sys.last_theta_max()) + " at t = " + std::to_string(t);
            return false;
        }
        if (t >= next_sample) {
            run.series_t.push_back(t);
            run.series_mu.push_back(Bloch(y[0], y[1], y[2]));
            run.series_dmu2.push_back(2.0 * (y[0] * dy[0] + y[1] * dy[1] + y[2] * dy[2]));
            while (next_sample <= t) next_sample += series_dt;
        }
        while (next_record < sorted_records.size() && sorted_records[next_record] <= t) {
            MfqfState snap(table);
            sys.unpack(y, t, snap);
            run.snapshots.push_back(std::move(snap));
            ++next_record;
        }
        return true;
    };

    auto res = integrate_dopri5<Eigen::VectorXd>(rhs, y0, s0.time, s0.time + t_final, opt.ode,
                                                 observer);
    run.status = res.status;
    run.message = res.message.empty() ? abort_reason : res.message + "; " + abort_reason;
    run.steady = res.status == OdeStatus::SteadyState;
    run.n_steps = res.n_steps;
    sys.unpack(res.state, res.t_final, run.final_state);
    return run;
}

void write_trajectory_csv(const std::string& path, const MfqfRunResult& run) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "time,mu_x,mu_y,mu_z\n";
    for (size_t i = 0; i < run.series_t.size(); ++i) {
        os << fmt_double(run.series_t[i]) << ',' << fmt_double(run.series_mu[i][0]) << ','
           << fmt_double(run.series_mu[i][1]) << ',' << fmt_double(run.series_mu[i][2]) << '\n';
    }
}

void write_correlator_csv(const std::string& path, const CorrelatorField& eta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    const int d = eta.table().fc_mode() ? 1 : eta.table().dim();
    for (int k = 0; k < d; ++k) os << "r_" << k + 1 << ',';
    os << "eta_xx,eta_yy,eta_zz,eta_xy,eta_xz,eta_yz\n";
    for (int i = 0; i < eta.n_disp(); ++i) {
        for (int c : eta.table().coords()[i]) os << c << ',';
        for (int c = 0; c < kNumPairs; ++c)
            os << fmt_double(eta.at(i, c)) << (c + 1 < kNumPairs ? ',' : '\n');
    }
}

} // namespace ddspin
