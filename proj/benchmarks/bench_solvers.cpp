#include <benchmark/benchmark.h>

#include "asyncra/amp.hpp"
#include "asyncra/denoiser.hpp"
#include "asyncra/mamp.hpp"
#include "asyncra/oamp.hpp"

namespace {

using namespace asyncra;

Scenario make_scenario(int n_users, int pilot_len, int max_delay, int n_active, int n_antennas) {
    SystemConfig c;
    c.n_users = n_users;
    c.pilot_len = pilot_len;
    c.max_delay = max_delay;
    c.n_active = n_active;
    c.n_antennas = n_antennas;
    return draw_scenario(c, 12345);
}

void BM_DenoiseColumn(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0)), T = 4;
    const Scenario sc = make_scenario(N, 50, T, N / 8, 1);
    const Prior prior = Prior::uniform(sc.truth.beta, sc.cfg.activity_prob(), T);
    const CVector r = sc.truth.H.col(0) + CVector::Constant(sc.truth.H.rows(), cdouble(1e-7, 0.0));
    const double tau2 = sc.truth.beta.mean() * 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(denoise_column(r, tau2, prior));
    state.SetItemsProcessed(state.iterations() * r.size());
}
BENCHMARK(BM_DenoiseColumn)->Arg(200)->Arg(400)->Arg(800);

// One LMMSE filter build at fixed (T+1)N = 1000.
void BM_OampFilter(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0)), T = 4;
    const Scenario sc = make_scenario(200, L - T, T, 10, 1);
    FlopCounter flops;
    const LmmseStage stage(sc.pilots.matrix(), flops);
    for (auto _ : state) benchmark::DoNotOptimize(stage.filter(1e-12, sc.rx.noise_var_eff));
    state.counters["flops"] = benchmark::Counter(flops.total / static_cast<double>(state.iterations()));
}
BENCHMARK(BM_OampFilter)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMicrosecond);

void BM_Spectral(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0)), T = 4;
    const Scenario sc = make_scenario(200, L - T, T, 10, 1);
    for (auto _ : state) benchmark::DoNotOptimize(compute_spectral(sc.pilots.matrix(), 20));
}
BENCHMARK(BM_Spectral)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMicrosecond);

// Full solves with a fixed iteration count so that runtimes compare like for like.
template <SolverResult (*Solve)(const Problem&, const SolverOptions&)>
void BM_Solver(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0)), T = 4;
    const Scenario sc = make_scenario(200, L - T, T, 20, 16);
    const Prior prior = Prior::uniform(sc.truth.beta, sc.cfg.activity_prob(), T);
    const Problem pb{sc.rx.Y, sc.pilots, prior, sc.rx.noise_var_eff};
    SolverOptions opt;
    opt.stop.max_iters = 10;
    opt.stop.tol = 1e-300;
    sc.pilots.gram_eigenvalues();
    double flops = 0.0;
    for (auto _ : state) {
        const SolverResult r = Solve(pb, opt);
        for (const auto& it : r.diag.trace) flops += it.flops;
        benchmark::DoNotOptimize(r.H_hat.data());
    }
    state.counters["flops_per_iter"] = benchmark::Counter(flops / (10.0 * static_cast<double>(state.iterations())));
}
BENCHMARK(BM_Solver<run_oamp>)->Name("BM_Oamp")->Arg(44)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solver<run_mamp>)->Name("BM_Mamp")->Arg(44)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solver<run_amp>)->Name("BM_Amp")->Arg(44)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
