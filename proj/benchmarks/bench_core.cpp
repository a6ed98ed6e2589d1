#include <benchmark/benchmark.h>

#include "kpo/classical.hpp"
#include "kpo/model.hpp"
#include "kpo/quantum.hpp"
#include "kpo/spectral.hpp"
#include "kpo/rng.hpp"

using namespace kpo;

namespace {

ModelParams chaotic_params() {
    ModelParams p;
    p.coupling = 1.0;
    return p;
}

} // namespace

static void BM_ClassicalRk4Step(benchmark::State& state) {
    const ModelParams p = chaotic_params();
    PhaseState s{0.3, -0.2, 0.4, 0.1};
    for (auto _ : state) {
        s = step_rk4(s, p, 1e-4);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_ClassicalRk4Step);

static void BM_MatrixFreeApply(benchmark::State& state) {
    const FockDimension dim{static_cast<int>(state.range(0))};
    const MatrixFreeHamiltonian h(chaotic_params(), dim);
    ComplexVector in = vacuum_state(dim), out(dim.total_dim());
    for (auto _ : state) {
        h.apply(in, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_MatrixFreeApply)->Arg(15)->Arg(30)->Arg(40);

static void BM_DenseApply(benchmark::State& state) {
    const FockDimension dim{static_cast<int>(state.range(0))};
    const DenseHamiltonian h(build_hamiltonian(chaotic_params(), dim));
    ComplexVector in = vacuum_state(dim), out(dim.total_dim());
    for (auto _ : state) {
        h.apply(in, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_DenseApply)->Arg(15)->Arg(30);

static void BM_DisplacementMatrix(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(displacement_matrix(30, Complex(2.4, -1.8)));
    }
}
BENCHMARK(BM_DisplacementMatrix);

static void BM_WignerPoint(benchmark::State& state) {
    const FockDimension dim{30};
    const MatrixFreeHamiltonian h(chaotic_params(), dim);
    const ComplexVector psi = evolve(vacuum_state(dim), h, EvolutionConfig{1e-3, 0.5, 10});
    for (auto _ : state) {
        benchmark::DoNotOptimize(wigner(psi, dim, Complex(0.7, -0.4), Complex(-0.2, 1.1)));
    }
}
BENCHMARK(BM_WignerPoint);

static void BM_WignerSosMarginal(benchmark::State& state) {
    const FockDimension dim{30};
    const MatrixFreeHamiltonian h(chaotic_params(), dim);
    const ComplexVector psi = evolve(vacuum_state(dim), h, EvolutionConfig{1e-3, 0.5, 10});
    for (auto _ : state) {
        benchmark::DoNotOptimize(wigner_sos_marginal(psi, dim, 0.7, -0.4));
    }
}
BENCHMARK(BM_WignerSosMarginal);

static void BM_SchrodingerRk4Step(benchmark::State& state) {
    const FockDimension dim{30};
    const MatrixFreeHamiltonian h(chaotic_params(), dim);
    const ComplexVector psi0 = vacuum_state(dim);
    for (auto _ : state) {
        benchmark::DoNotOptimize(evolve(psi0, h, EvolutionConfig{1e-3, 1e-2, 10}));
    }
    state.SetItemsProcessed(state.iterations() * 10); // RK4 steps per call
}
BENCHMARK(BM_SchrodingerRk4Step);

static void BM_Eigendecompose(benchmark::State& state) {
    const FockDimension dim{static_cast<int>(state.range(0))};
    const ComplexMatrix h = build_hamiltonian(chaotic_params(), dim);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eigendecompose(h));
    }
}
BENCHMARK(BM_Eigendecompose)->Arg(8)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_BrodyFit(benchmark::State& state) {
    Splitmix64 gen(5);
    std::vector<double> spacings;
    for (int k = 0; k < 50; ++k) spacings.push_back(-std::log(gen.next_unit()));
    for (auto _ : state) {
        benchmark::DoNotOptimize(brody_fit(spacings));
    }
    state.SetLabel("50 spacings, 3 starts");
}
BENCHMARK(BM_BrodyFit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
