#include <benchmark/benchmark.h>

#include "ddspin/fc_reduced.hpp"
#include "ddspin/lindblad.hpp"
#include "ddspin/mfqf.hpp"

using namespace ddspin;

namespace {
ModelParams xy_params() {
    return ModelParams{.delta = 1.6, .omega = 0.5, .coupling = 1.0, .gamma = 1.0,
                       .kind = InteractionKind::XY};
}
} // namespace

static void BM_MfqfRhs1D(benchmark::State& state) {
    const auto lat = LatticeSpec::chain(int(state.range(0)));
    auto tab = DisplacementTable::build(lat);
    MfqfSystem sys(tab, xy_params());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(sys.state_size());
    y[2] = -1.0;
    Eigen::VectorXd dy(sys.state_size());
    for (auto _ : state) {
        sys.rhs(y, dy);
        benchmark::DoNotOptimize(dy.data());
    }
    state.SetItemsProcessed(state.iterations() * tab->n_disp());
}
BENCHMARK(BM_MfqfRhs1D)->Arg(128)->Arg(512);

static void BM_MfqfRhs2D(benchmark::State& state) {
    const int l = int(state.range(0));
    const auto lat = LatticeSpec::hypercubic({l, l});
    auto tab = DisplacementTable::build(lat);
    MfqfSystem sys(tab, xy_params());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(sys.state_size());
    y[2] = -1.0;
    Eigen::VectorXd dy(sys.state_size());
    for (auto _ : state) {
        sys.rhs(y, dy);
        benchmark::DoNotOptimize(dy.data());
    }
    state.SetItemsProcessed(state.iterations() * tab->n_disp());
}
BENCHMARK(BM_MfqfRhs2D)->Arg(32)->Arg(64)->Arg(100);

static void BM_LiouvillianApply(benchmark::State& state) {
    const int n = int(state.range(0));
    const auto liouv = build_liouvillian(LatticeSpec::chain(n), xy_params(), {});
    VectorXcd v = VectorXcd::Random(liouv.dim());
    for (auto _ : state) {
        VectorXcd w = liouv.apply(v);
        benchmark::DoNotOptimize(w.data());
    }
}
BENCHMARK(BM_LiouvillianApply)->Arg(4)->Arg(6)->Arg(8);

static void BM_FcReducedSteadyState(benchmark::State& state) {
    const int n = int(state.range(0));
    ModelParams p = xy_params();
    p.coupling = 6.0 / (n - 1);
    for (auto _ : state) {
        FcReducedSolver solver(n, p);
        auto ss = solver.steady_state();
        benchmark::DoNotOptimize(ss.residual);
    }
}
BENCHMARK(BM_FcReducedSteadyState)->Arg(8)->Arg(10);

BENCHMARK_MAIN();
