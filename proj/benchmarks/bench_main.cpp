#include <random>

#include <benchmark/benchmark.h>

#include "morsevanish/critical.hpp"
#include "morsevanish/flow.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/oracle.hpp"

using namespace morsevanish;

namespace {

void BM_SmithNormalForm(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> entry(-3, 3);
    IntMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = entry(rng);
    for (auto _ : state) benchmark::DoNotOptimize(smith_normal_form(m));
}
BENCHMARK(BM_SmithNormalForm)->Arg(8)->Arg(16)->Arg(32);

void BM_CubicalOracle(benchmark::State& state)
{
    const auto& e = catalog_lookup("z^2");
    OracleOptions o;
    o.resolution = static_cast<int>(state.range(0));
    o.check_refinement = false;
    o.max_box_doublings = 0;
    o.jobs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(sublevel_pair_homology(e.problem, e.eps, 1.0, 10.0, o));
}
BENCHMARK(BM_CubicalOracle)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CriticalSearch(benchmark::State& state)
{
    const auto& e = catalog_lookup("z^3");
    CriticalOptions o;
    o.starts_per_axis = static_cast<int>(state.range(0));
    o.jobs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(find_critical_points(e.problem, e.eps, o));
}
BENCHMARK(BM_CriticalSearch)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);

void BM_BoundaryCounts(benchmark::State& state)
{
    const auto& e = catalog_lookup(state.range(0) == 1 ? "double_well_1d" : "z^3");
    const auto pts = find_critical_points(e.problem, e.eps).points;
    CountOptions o;
    o.jobs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(compute_boundaries(e.problem, e.eps, pts, o));
}
BENCHMARK(BM_BoundaryCounts)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
