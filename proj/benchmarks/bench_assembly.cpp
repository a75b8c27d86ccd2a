#include <graphfv/assembly.hpp>
#include <graphfv/io.hpp>

#include <benchmark/benchmark.h>

using namespace graphfv;

namespace {

Graph tree(unsigned depth) {
    TreeingConfig cfg;
    cfg.depth = depth;
    return derive_treeing_fields(generate_tree(cfg), cfg);
}

void BM_AssembleTransport(benchmark::State& state) {
    const Graph g = refine(tree(static_cast<unsigned>(state.range(0))), 5e-5).graph;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_transport(g, 0.1));
    state.counters["edges"] = static_cast<double>(g.num_edges());
}

void BM_AssembleDriftDiffusion(benchmark::State& state) {
    const Graph g = refine(tree(static_cast<unsigned>(state.range(0))), 5e-5).graph;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_drift_diffusion(g, 0.1));
    state.counters["edges"] = static_cast<double>(g.num_edges());
}

void BM_SchurReduce(benchmark::State& state) {
    const Graph g = refine(tree(static_cast<unsigned>(state.range(0))), 5e-5).graph;
    const LinearSystem sys = assemble_drift_diffusion(g, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(schur_reduce(sys));
}

}  // namespace

BENCHMARK(BM_AssembleTransport)->Arg(6)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleDriftDiffusion)->Arg(6)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SchurReduce)->Arg(6)->Arg(9)->Unit(benchmark::kMillisecond);
