#include <doctest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "ddspin/lindblad.hpp"
#include "ddspin/meanfield.hpp"

using namespace ddspin;

namespace {

MatrixXcd random_hermitian(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (m + m.adjoint().eval());
}

DensityMatrix random_density(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    DensityMatrix rho = m * m.adjoint();
    return rho / rho.trace().real();
}

ModelParams params(double delta, double omega, double j,
                   InteractionKind kind = InteractionKind::XY) {
    return ModelParams{.delta = delta, .omega = omega, .coupling = j, .gamma = 1.0, .kind = kind};
}

LatticeSpec one_site() { return LatticeSpec::chain(1, Boundary::Open); }

} // namespace

TEST_CASE("single spin without drive: eigenvalues {0, -1/2, -1/2, -1}") {
    const auto liouv = build_liouvillian(one_site(), params(0, 0, 0), {});
    Eigen::ComplexEigenSolver<MatrixXcd> es(MatrixXcd(liouv.op));
    std::vector<double> re;
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-12);
        re.push_back(es.eigenvalues()[i].real());
    }
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(re[1] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(re[2] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(re[3]) < 1e-12);
}

TEST_CASE("single spin with detuning: spectrum edge ordering") {
    const double delta = 0.7;
    const auto liouv = build_liouvillian(one_site(), params(delta, 0, 0), {});
    const auto spec = liouvillian_spectrum_edge(liouv, 4);
    REQUIRE(spec.converged);
    REQUIRE(spec.eigenvalues.size() == 4);
    CHECK(std::abs(spec.eigenvalues[0]) < 1e-9);
    CHECK(spec.eigenvalues[1].real() == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::abs(spec.eigenvalues[1].imag() - delta) < 1e-9);
    CHECK(spec.eigenvalues[2].real() == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::abs(spec.eigenvalues[2].imag() + delta) < 1e-9);
    CHECK(spec.eigenvalues[3].real() == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("trace is conserved for random states, all kinds and lattices") {
    std::mt19937_64 rng(99);
    const std::vector<LatticeSpec> lats = {LatticeSpec::chain(3), LatticeSpec::fully_connected(3),
                                           LatticeSpec::chain(4, Boundary::Open)};
    for (const auto& lat : lats) {
        for (auto kind : {InteractionKind::XY, InteractionKind::Ising}) {
            const auto liouv = build_liouvillian(lat, params(0.9, 0.6, 0.8, kind), {});
            const Eigen::Index hdim = liouv.hilbert_dim();
            for (int k = 0; k < 20; ++k) {
                const MatrixXcd rho = random_hermitian(int(hdim), rng);
                const MatrixXcd lrho = unvec(liouv.apply(vec(rho)));
                CHECK(std::abs(lrho.trace()) < 1e-12 * double(hdim) * rho.cwiseAbs().maxCoeff());
            }
        }
    }
}

TEST_CASE("generator commutes with hermitian conjugation") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(1.1, 0.4, 0.7), {});
    for (int k = 0; k < 20; ++k) {
        MatrixXcd m(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) m(i, j) = Complex(g(rng), g(rng));
        const MatrixXcd la = unvec(liouv.apply(vec(m)));
        const MatrixXcd lb = unvec(liouv.apply(vec(MatrixXcd(m.adjoint()))));
        CHECK((MatrixXcd(la.adjoint()) - lb).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("two-site fully-connected equals the single-bond chain") {
    const auto a = build_liouvillian(LatticeSpec::fully_connected(2), params(1.2, 0.5, 0.9), {});
    const auto b =
        build_liouvillian(LatticeSpec::chain(2, Boundary::Open), params(1.2, 0.5, 0.9), {});
    CHECK((MatrixXcd(a.op) - MatrixXcd(b.op)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("steady state of the driven single spin") {
    const auto liouv = build_liouvillian(one_site(), params(0, 0.5, 0), {});
    const auto ss = steady_state(liouv);
    REQUIRE(ss.converged);
    CHECK(ss.residual < 1e-10);
    CHECK(ss.null_space_dim == 1);
    const Bloch want(0, 2.0 / 3.0, -1.0 / 3.0);
    CHECK((site_bloch_vector(ss.rho, 1, 0) - want).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("dark state without drive") {
    const auto liouv = build_liouvillian(one_site(), params(0.8, 0.0, 0.0), {});
    const auto ss = steady_state(liouv);
    REQUIRE(ss.converged);
    MatrixXcd want = MatrixXcd::Zero(2, 2);
    want(1, 1) = 1.0; // |down><down|
    CHECK((ss.rho - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("steady state matches a dense null-space oracle on two sites") {
    const auto liouv =
        build_liouvillian(LatticeSpec::chain(2, Boundary::Open), params(1.0, 0.5, 1.0), {});
    const auto ss = steady_state(liouv);
    REQUIRE(ss.converged);
    CHECK(ss.residual < 1e-10);

    Eigen::JacobiSVD<MatrixXcd> svd(MatrixXcd(liouv.op), Eigen::ComputeFullV);
    MatrixXcd rho_o = unvec(svd.matrixV().col(15));
    rho_o = 0.5 * (rho_o + MatrixXcd(rho_o.adjoint()));
    rho_o /= rho_o.trace();
    CHECK((ss.rho - rho_o).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(svd.singularValues()[14] > 1e-6); // kernel is one-dimensional
}

TEST_CASE("density-matrix checks flag the stationary state as physical") {
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(1.4, 0.6, 0.8), {});
    const auto ss = steady_state(liouv);
    REQUIRE(ss.converged);
    const auto chk = check_density_matrix(ss.rho);
    CHECK(chk.ok());
    CHECK(chk.hermiticity_error < 1e-10);
    CHECK(chk.trace_error < 1e-10);
    CHECK(chk.min_eigenvalue > -1e-8);
}

TEST_CASE("no-drive evolution is frozen in the dark state") {
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(0.7, 0.0, 0.5), {});
    const DensityMatrix rho0 = product_density_matrix(std::vector<Bloch>(3, Bloch(0, 0, -1)));
    auto traj = evolve_rho(rho0, liouv, 5.0, {1.0, 2.5, 5.0});
    REQUIRE(traj.ok());
    for (const auto& rho : traj.states)
        CHECK((rho - rho0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-spin decay from the excited state") {
    const auto liouv = build_liouvillian(one_site(), params(0, 0, 0), {});
    const DensityMatrix rho0 = product_density_matrix({Bloch(0, 0, 1)});
    auto traj =
        evolve_rho(rho0, liouv, 3.0, {0.5, 1.0, 2.0, 3.0}, {.rtol = 1e-10, .atol = 1e-12});
    REQUIRE(traj.ok());
    for (size_t i = 1; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const Bloch mu = site_bloch_vector(traj.states[i], 1, 0);
        CHECK(mu[2] == doctest::Approx(2.0 * std::exp(-t) - 1.0).epsilon(1e-7));
    }
    CHECK(traj.max_trace_error < 1e-8);
    CHECK(traj.max_hermiticity_error < 1e-8);
}

TEST_CASE("long-time evolution agrees with the null-space steady state") {
    std::mt19937_64 rng(31);
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(0.8, 0.7, 0.6), {});
    const auto ss = steady_state(liouv);
    REQUIRE(ss.converged);
    auto traj = evolve_rho(random_density(8, rng), liouv, 40.0, {});
    REQUIRE(traj.ok());
    CHECK((traj.states.back() - ss.rho).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("J=0 factorization: exact per-site dynamics equals the meanfield flow") {
    const std::vector<Bloch> mus = {Bloch(0.3, -0.2, -0.4), Bloch(0, 0, -1), Bloch(0.1, 0.5, 0.2)};
    const auto p = params(0.9, 0.35, 0.0);
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), p, {});
    const std::vector<double> times = {0.5, 1.5, 3.0, 6.0};
    auto traj = evolve_rho(product_density_matrix(mus), liouv, 6.0, times,
                           {.rtol = 1e-11, .atol = 1e-13});
    REQUIRE(traj.ok());
    for (size_t i = 1; i < traj.times.size(); ++i) {
        for (int site = 0; site < 3; ++site) {
            auto mf = mf_integrate(mus[site], p, 2, traj.times[i],
                                   {.rtol = 1e-12, .atol = 1e-14});
            const Bloch exact = site_bloch_vector(traj.states[i], 3, site);
            CHECK((exact - mf.final_mu()).lpNorm<Eigen::Infinity>() < 1e-8);
        }
    }
}

TEST_CASE("magnetization distributions at hand-checked states") {
    const DensityMatrix rho1 = product_density_matrix({Bloch(0, 0, -1)});
    const auto d1 = magnetization_distribution(rho1, 1, 'x');
    CHECK(d1.values[0] == 1.0);
    CHECK(d1.values[1] == -1.0);
    CHECK(d1.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d1.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));

    const DensityMatrix rho2 = product_density_matrix({Bloch(1, 0, 0), Bloch(1, 0, 0)});
    const auto d2 = magnetization_distribution(rho2, 2, 'x');
    CHECK(d2.probabilities[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d2.probabilities[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d2.probabilities[2] == doctest::Approx(0.0).epsilon(1e-12));

    const DensityMatrix rho3 = product_density_matrix({Bloch(0, 0, -1), Bloch(0, 0, -1)});
    const auto d3 = magnetization_distribution(rho3, 2, 'z');
    CHECK(d3.probabilities[2] == doctest::Approx(1.0).epsilon(1e-12));

    // y-axis resolution of a y-polarized site
    const DensityMatrix rho4 = product_density_matrix({Bloch(0, 1, 0)});
    const auto d4 = magnetization_distribution(rho4, 1, 'y');
    CHECK(d4.probabilities[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bimodality index formula cases") {
    auto dist = [](std::vector<double> p) {
        MagnetizationDistribution d;
        const int n = int(p.size()) - 1;
        for (int k = 0; k <= n; ++k) d.values.push_back(n ? double(n - 2 * k) / n : 0.0);
        d.probabilities = std::move(p);
        return d;
    };
    CHECK(bimodality_index(dist({0.1, 0.8, 0.1})) == 0.0);
    CHECK(bimodality_index(dist({0.5, 0.0, 0.5})) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bimodality_index(dist({0.4, 0.1, 0.3, 0.2})) ==
          doctest::Approx(4.0 / 7.0).epsilon(1e-14));
    // exact plateau peaks merge into single maxima
    CHECK(bimodality_index(dist({0.3, 0.1, 0.1, 0.3, 0.2})) ==
          doctest::Approx(2.0 * 0.2 / 0.6).epsilon(1e-14));
    // monotone distribution: a single boundary peak
    CHECK(bimodality_index(dist({0.4, 0.3, 0.2, 0.1})) == 0.0);
}

TEST_CASE("leading eigenvalue is zero for generic parameters") {
    const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(1.3, 0.8, 0.5), {});
    const auto spec = liouvillian_spectrum_edge(liouv, 2);
    REQUIRE(spec.converged);
    CHECK(std::abs(spec.eigenvalues[0]) < 1e-9);
    CHECK(spec.eigenvalues[1].real() < -1e-3);
}

TEST_CASE("capacity refusal happens before allocation") {
    CHECK_THROWS_AS(build_liouvillian(LatticeSpec::chain(12), params(1, 1, 1), {.max_sites = 10}),
                    std::length_error);
}

TEST_CASE("krylov propagator matches the dense matrix exponential") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    const int n = 40;
    MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 0.3 * Complex(g(rng), g(rng));
    a -= 2.0 * MatrixXcd::Identity(n, n);
    SparseCd as = a.sparseView();
    VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));

    const VectorXcd kry = krylov_expmv(as, v, 1.7, 1e-12, 25);
    const VectorXcd dense = (1.7 * a).exp() * v;
    CHECK((kry - dense).norm() / dense.norm() < 1e-8);
}

TEST_CASE("the full spectrum sits in the closed left half-plane") {
    for (auto kind : {InteractionKind::XY, InteractionKind::Ising}) {
        const auto liouv = build_liouvillian(LatticeSpec::chain(3), params(1.1, 0.7, 0.9, kind),
                                             {});
        Eigen::ComplexEigenSolver<MatrixXcd> es(MatrixXcd(liouv.op));
        double max_re = -1e9;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            max_re = std::max(max_re, es.eigenvalues()[i].real());
        CHECK(max_re <= 1e-10);
        CHECK(max_re > -1e-10); // the steady state sits at zero
    }
}
