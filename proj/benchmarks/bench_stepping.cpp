#include <graphfv/assembly.hpp>
#include <graphfv/cases.hpp>
#include <graphfv/io.hpp>
#include <graphfv/timestepping.hpp>

#include <benchmark/benchmark.h>

using namespace graphfv;

namespace {

void run_steps(benchmark::State& state, const Refinement& mesh, const TestCase& tc, double dt, bool blocking) {
    const Graph& g = mesh.graph;
    const LinearSystem sys = assemble(g, tc.kind, dt);
    StepOptions opts;
    opts.temporal_blocking = blocking;
    TimeStepper ts(g, sys, tc.bc, opts);
    const SolutionState init = initialize(mesh, sys.layout, tc.u0);
    const auto steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        ts.reset(init);
        ts.advance(steps);
        benchmark::DoNotOptimize(ts.running_max());
    }
    state.counters["cell_steps"] = benchmark::Counter(static_cast<double>(g.num_edges() * steps),
                                                      benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ChainBlocked(benchmark::State& state) {
    const TestCase tc = builtin_case("TC1A");
    run_steps(state, refine(tc.graph, 1e-5), tc, 1e-3, true);
}

void BM_ChainSingleStep(benchmark::State& state) {
    const TestCase tc = builtin_case("TC1A");
    run_steps(state, refine(tc.graph, 1e-5), tc, 1e-3, false);
}

void BM_Tc3Transport(benchmark::State& state) {
    const TestCase tc = builtin_case("TC3");
    run_steps(state, refine(tc.graph, 1e-3), tc, 1e-4, true);
}

void BM_TreeDriftDiffusion(benchmark::State& state) {
    const TestCase tc = treeing_case(TreeingConfig{}, 500.0);
    run_steps(state, refine(tc.graph, 1.0), tc, 0.1, true);
}

}  // namespace

BENCHMARK(BM_ChainBlocked)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainSingleStep)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tc3Transport)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeDriftDiffusion)->Arg(5000)->Unit(benchmark::kMillisecond);
