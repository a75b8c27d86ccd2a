#include <graphfv/assembly.hpp>
#include <graphfv/cases.hpp>
#include <graphfv/io.hpp>
#include <graphfv/sparse_lu.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace graphfv;

namespace {

LinearSystem line_system(double h) {
    return assemble_diffusion_step(refine(builtin_case("TC2").graph, h).graph, 1e-3);
}

LinearSystem tree_system() {
    TreeingConfig cfg;
    const Graph g = refine(derive_treeing_fields(generate_tree(cfg), cfg), 5e-5).graph;
    return assemble_drift_diffusion(g, 0.1);
}

void BM_FactorLine(benchmark::State& state) {
    const LinearSystem sys = line_system(1.0 / static_cast<double>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(SparseLU(sys.matrix));
    state.counters["n"] = static_cast<double>(sys.matrix.size());
}

void BM_FactorTree(benchmark::State& state) {
    const LinearSystem sys = tree_system();
    for (auto _ : state) benchmark::DoNotOptimize(SparseLU(sys.matrix));
    state.counters["n"] = static_cast<double>(sys.matrix.size());
}

void BM_SolveTree(benchmark::State& state) {
    const LinearSystem sys = tree_system();
    const SparseLU lu(sys.matrix);
    const std::vector<double> b(sys.matrix.size(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(lu.solve(b));
    state.counters["n"] = static_cast<double>(sys.matrix.size());
}

}  // namespace

BENCHMARK(BM_FactorLine)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FactorTree)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveTree)->Unit(benchmark::kMicrosecond);
